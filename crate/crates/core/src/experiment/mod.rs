//! Monte Carlo harness: bias/variance/MISE tables, CLT checks at probe
//! points, nested Monte Carlo estimates of the first Hajek kernel variance,
//! and oracle cross-checks.

mod clt;
mod config;
mod mc;
mod oracle;
mod v1s;

pub use clt::{ks_critical, ks_one_sample_normal, ks_two_sample, run_clt, CltReport, CltRow};
pub use config::{parse_config, Estimator, ExperimentConfig, SRule, Target};
pub use mc::{run_mc, McRow, McSummary, Stats};
pub use oracle::{enumeration_check, mc_consistency, oracle_check, tie_line, tiny_instance, OracleLine, OracleReport};
pub use v1s::{estimate_v1s, V1sEstimate, V1sLearner, V1sMethod};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `threads` workers.
pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Subsample size for `n` under `rule`.
pub fn resolve_s(n: usize, rule: SRule) -> usize {
    match rule {
        SRule::Sqrt => n.isqrt(),
        SRule::Pow08 => {
            // largest s with s^5 <= n^4
            let target = (n as u128).pow(4);
            let mut s = (n as f64).powf(0.8).floor() as u128;
            while s.pow(5) > target {
                s -= 1;
            }
            while (s + 1).pow(5) <= target {
                s += 1;
            }
            s as usize
        }
        SRule::Fixed(k) => k.min(n),
    }
    .max(1)
}
