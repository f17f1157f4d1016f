//! Rate-loss bound against the least favourable channel of a convex family.
//!
//! For a convex set of channels with minimiser `W*` of `I(P, .)`, every member
//! `W` satisfies
//! `inf I <= I(P, W) - [D(W || W* | P) - D(PW || PW*)]`.
//! The family here is the convex hull of a subset's strategy channels; the
//! minimiser over that hull is found by pairwise Frank-Wolfe.

use serde::{Deserialize, Serialize};

use super::capacity::SubsetMask;
use super::channel::{divergence_row, mutual_information, strategy_channel, Channel, StrategyDistribution};
use super::scenario::DiscreteScenario;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    /// Infimum of `I(P, .)` over the convex hull of the subset's channels.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Smallest `I(P, W_theta)` over the subset's own members.
    pub compound: f64,
    /// Mixture weights of the minimiser, one per subset member.
    pub hull_weights: Vec<f64>,
}

/// Evaluates both sides of the bound for the member state `theta`.
pub fn divergence_gap_bound(
    scn: &DiscreteScenario,
    input: &StrategyDistribution,
    subset: SubsetMask,
    theta: usize,
) -> Result<GapBound> {
    let members: Vec<usize> = subset
        .members()
        .into_iter()
        .filter(|&i| i < scn.n_states())
        .collect();
    if members.is_empty() {
        return Err(Error::Argument("empty subset".into()));
    }
    if !members.contains(&theta) {
        return Err(Error::Argument(format!("state {theta} is not in the subset")));
    }
    if input.len() != scn.n_strategies() {
        return Err(Error::Argument("input law does not match the strategy alphabet".into()));
    }
    let channels: Vec<Channel> = members
        .iter()
        .map(|&i| strategy_channel(scn, i))
        .collect::<Result<_>>()?;
    let refs: Vec<&Channel> = channels.iter().collect();
    gap_bound_for_channels(&input.probs, &refs, members.iter().position(|&m| m == theta).unwrap())
}

/// Bound for an explicit list of channels; `which` selects the member `W`.
pub fn gap_bound_for_channels(p: &[f64], channels: &[&Channel], which: usize) -> Result<GapBound> {
    let weights = hull_minimizer(p, channels);
    let star = Channel::mixture(channels, &weights);
    check_support(p, channels, &star)?;
    let lhs = mutual_information(p, &star);
    let w = channels[which];
    let q_star = star.output(p);
    let q_w = w.output(p);
    let mut cond = 0.0;
    for (t, &pt) in p.iter().enumerate() {
        if pt > 0.0 {
            cond += pt * divergence_row(w.row(t), star.row(t));
        }
    }
    let marg = divergence_row(&q_w, &q_star);
    if !cond.is_finite() || !marg.is_finite() {
        return Err(Error::Precondition(
            "divergence from the least favourable channel is infinite".into(),
        ));
    }
    let rhs = mutual_information(p, w) - (cond - marg);
    let compound = channels
        .iter()
        .map(|c| mutual_information(p, c))
        .fold(f64::INFINITY, f64::min);
    Ok(GapBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
        compound,
        hull_weights: weights,
    })
}

fn check_support(p: &[f64], channels: &[&Channel], star: &Channel) -> Result<()> {
    for (k, c) in channels.iter().enumerate() {
        for (t, &pt) in p.iter().enumerate() {
            if pt <= 0.0 {
                continue;
            }
            for (o, (&a, &b)) in c.row(t).iter().zip(star.row(t)).enumerate() {
                if a > 0.0 && b <= 0.0 {
                    return Err(Error::Precondition(format!(
                        "member {k} puts mass on output {o} for input {t}, \
                         outside the support of the least favourable channel"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Partial derivatives of `lambda -> I(P, sum_j lambda_j W_j)`.
fn hull_gradient(p: &[f64], channels: &[&Channel], lambda: &[f64]) -> Vec<f64> {
    let mix = Channel::mixture(channels, lambda);
    let q = mix.output(p);
    channels
        .iter()
        .map(|c| {
            let qc = c.output(p);
            let mut g = 0.0;
            for (t, &pt) in p.iter().enumerate() {
                if pt <= 0.0 {
                    continue;
                }
                for (o, (&a, &m)) in c.row(t).iter().zip(mix.row(t)).enumerate() {
                    if a <= 0.0 {
                        continue;
                    }
                    let ratio = if m > 0.0 {
                        (m / q[o]).log2()
                    } else if q[o] > 0.0 {
                        // mass appears where other inputs already land
                        -1e3
                    } else {
                        // 0/0: the limit along the direction of this member
                        (a / qc[o]).log2()
                    };
                    g += pt * a * ratio;
                }
            }
            g
        })
        .collect()
}

/// Pairwise Frank-Wolfe on the weight simplex, stopped when the duality gap
/// falls below 1e-12.
pub fn hull_minimizer(p: &[f64], channels: &[&Channel]) -> Vec<f64> {
    let n = channels.len();
    let mut lambda = vec![1.0 / n as f64; n];
    if n == 1 {
        return lambda;
    }
    for _ in 0..20_000 {
        let g = hull_gradient(p, channels, &lambda);
        let (toward, gmin) = g
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let gap: f64 = lambda.iter().zip(&g).map(|(l, gi)| l * gi).sum::<f64>() - gmin;
        if gap <= 1e-12 {
            break;
        }
        let (away, _) = g
            .iter()
            .copied()
            .enumerate()
            .filter(|(j, _)| lambda[*j] > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if away == toward {
            break;
        }
        let max_step = lambda[away];
        let slope = |s: f64| {
            let mut l = lambda.clone();
            l[toward] += s;
            l[away] -= s;
            let gg = hull_gradient(p, channels, &l);
            gg[toward] - gg[away]
        };
        // the objective is convex along the segment: bisect on the slope
        let step = if slope(max_step) <= 0.0 {
            max_step
        } else {
            let (mut lo, mut hi) = (0.0, max_step);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if step <= 0.0 {
            break;
        }
        lambda[toward] += step;
        lambda[away] -= step;
        if lambda[away] < 1e-300 {
            lambda[away] = 0.0;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(e: f64) -> Channel {
        Channel::new(2, 2, vec![1.0 - e, e, e, 1.0 - e])
    }

    #[test]
    fn symmetric_pair_has_interior_minimiser() {
        // BSC(0.1) and BSC(0.9) mix to the useless BSC(1/2)
        let (a, b) = (bsc(0.1), bsc(0.9));
        let r = gap_bound_for_channels(&[0.5, 0.5], &[&a, &b], 0).unwrap();
        assert!(r.lhs.abs() < 1e-12);
        assert!((r.hull_weights[0] - 0.5).abs() < 1e-6);
        assert!(r.holds);
    }

    #[test]
    fn single_member_is_equality() {
        let a = bsc(0.2);
        let r = gap_bound_for_channels(&[0.3, 0.7], &[&a], 0).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-14);
    }

    #[test]
    fn support_violation_is_precondition_error() {
        // the least favourable member has a zero where the other does not
        let clean = Channel::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let useless = Channel::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]);
        let r = gap_bound_for_channels(&[0.5, 0.5], &[&clean, &useless], 0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
