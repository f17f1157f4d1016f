//! Runs a small seeded sweep, prints the CSV and reads off the SNR gap at two
//! bits between perfect CSI and the mean EIO capacity.

use eio_lab::harness::{gap_at_rate, run_sweep, to_csv, Curve, CurveKey, SweepSpec};

fn main() -> eio_lab::Result<()> {
    let spec = SweepSpec::from_json(
        r#"{"id": "demo", "snr_db": [0, 2, 4, 6, 8, 10, 12], "gamma": [0.01], "n_pilots": [1, 3],
            "rice_db": [0], "curves": ["perfect_csi", "composite", "eio"], "draws": 4000, "seed": 11}"#,
    )?;
    let rows = run_sweep(&spec)?;
    print!("{}", to_csv(&rows));
    let perfect = CurveKey::new(Curve::PerfectCsi);
    for n in [1, 3] {
        let gap = gap_at_rate(&rows, &perfect, &CurveKey::new(Curve::Eio).pilots(n), 2.0)?;
        println!("N={n}: {gap:.2} dB behind perfect CSI at 2 bits");
    }
    Ok(())
}
