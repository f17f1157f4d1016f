//! Seeded Monte Carlo experiments: outage checks and SNR sweeps.

pub mod outage;
pub mod sweep;

pub use outage::{empirical_outage, empirical_outage_stats, OutageEstimate};
pub use sweep::{
    gap_at_rate, grid_model, read_csv, run_sweep, snr_at_rate, to_csv, with_thread_cap, write_csv,
    Curve, CurveKey, SweepRow, SweepSpec, CSV_HEADER, THREADS_ENV,
};
