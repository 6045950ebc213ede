use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use super::{
    q_ead, q_lgd, q_pd, ScenarioConfig, STREAM_EXPOSURE, STREAM_FACTOR, STREAM_LOSS,
    STREAM_ORIGINATION,
};
use crate::dashboards::{conditional_pd, ExposureRecord, PortfolioSnapshot};
use crate::rng::substream;
use crate::Result;

#[derive(Debug, Clone)]
struct Tracked {
    key: u64,
    record: ExposureRecord,
}

fn originate(config: &ScenarioConfig, key: u64, coords: &[u64]) -> Tracked {
    let mut rng = substream(config.seed, coords);
    let ead = q_ead(rng.random_range(20.0..200.0));
    let lgd = q_lgd(config.lgd + 0.3 * (rng.random::<f64>() - 0.5));
    // Log-uniform between a quarter and four times the base PD.
    let pd = q_pd(config.period_pd * 4f64.powf(2.0 * rng.random::<f64>() - 1.0));
    Tracked {
        key,
        record: ExposureRecord::performing(format!("E{key:06}"), ead, lgd, pd),
    }
}

fn factor(config: &ScenarioConfig, t: usize) -> f64 {
    if config.correlation == 0.0 {
        return 0.0;
    }
    StandardNormal.sample(&mut substream(config.seed, &[STREAM_FACTOR, t as u64]))
}

fn step(config: &ScenarioConfig, e: &Tracked, t: usize, z: f64) -> Option<Tracked> {
    let mut rng = substream(config.seed, &[STREAM_EXPOSURE, e.key, t as u64]);
    let r = &e.record;
    let next = if r.performing {
        let pd = conditional_pd(r.pd, config.correlation, z);
        if rng.random::<f64>() < pd {
            let ead_def = q_ead(r.ead * (1.0 + 0.1 * rng.random::<f64>()));
            let lgd_eop = q_lgd(r.lgd * config.lgd_bias * (0.9 + 0.2 * rng.random::<f64>()));
            let wo = if rng.random::<f64>() < 0.2 {
                q_ead(0.1 * ead_def)
            } else {
                0.0
            };
            ExposureRecord::non_performing(r.id.clone(), ead_def - wo, lgd_eop)
                .with_write_off(wo)
                .with_default_values(ead_def, r.lgd)
        } else if rng.random::<f64>() < 0.03 {
            return None;
        } else {
            let ead = q_ead(r.ead * (1.0 - 0.1 * rng.random::<f64>()));
            let shock: f64 = StandardNormal.sample(&mut rng);
            let pd = q_pd(r.pd * (0.2 * shock).exp());
            ExposureRecord::performing(r.id.clone(), ead, r.lgd, pd)
        }
    } else {
        if r.ead == 0.0 {
            // Fully written off last period.
            return None;
        }
        let v = rng.random::<f64>();
        if v < config.cure_share {
            ExposureRecord::performing(r.id.clone(), r.ead, r.lgd, q_pd(0.1))
        } else if v < config.cure_share + 0.25 {
            ExposureRecord::non_performing(r.id.clone(), 0.0, r.lgd).with_write_off(r.ead)
        } else {
            let recovered = q_ead(0.2 * r.ead * rng.random::<f64>()).min(r.ead);
            let remaining = r.ead - recovered;
            let wo = q_ead(0.05 * remaining * rng.random::<f64>()).min(remaining);
            let lgd = q_lgd(r.lgd + 0.05 * (rng.random::<f64>() - 0.5));
            ExposureRecord::non_performing(r.id.clone(), remaining - wo, lgd).with_write_off(wo)
        }
    };
    Some(Tracked {
        key: e.key,
        record: next,
    })
}

/// Snapshots at `0..=periods` of a book with defaults, workouts, cures,
/// maturities and new volume. All amounts are on dyadic grids.
pub fn simulate_snapshots(config: &ScenarioConfig) -> Result<Vec<PortfolioSnapshot>> {
    config.validate()?;
    let n = config.n_exposures as u64;
    let mut book: Vec<Tracked> = (0..n)
        .into_par_iter()
        .map(|k| originate(config, k, &[STREAM_ORIGINATION, 0, k]))
        .collect();
    let mut out = Vec::with_capacity(config.periods + 1);
    out.push(PortfolioSnapshot::new(
        0,
        book.iter().map(|e| e.record.clone()).collect(),
    )?);
    for t in 1..=config.periods {
        let z = factor(config, t);
        let mut next: Vec<Tracked> = book.par_iter().filter_map(|e| step(config, e, t, z)).collect();
        let first_key = n + ((t - 1) * config.new_volume) as u64;
        next.extend((0..config.new_volume as u64).map(|k| {
            let key = first_key + k;
            originate(config, key, &[STREAM_ORIGINATION, t as u64, key])
        }));
        out.push(PortfolioSnapshot::new(
            t as i64,
            next.iter().map(|e| e.record.clone()).collect(),
        )?);
        book = next;
    }
    Ok(out)
}

/// Provisions of a simulated snapshot: a fraction of EL for performing
/// exposures and the full EL for defaulted ones.
pub fn provisions(snapshot: &PortfolioSnapshot, performing_factor: f64) -> f64 {
    snapshot
        .exposures
        .iter()
        .map(|e| if e.performing { performing_factor * e.el } else { e.el })
        .sum()
}

/// `EAD * LGD` of a static book used for loss series.
pub fn loss_series_weights(config: &ScenarioConfig) -> Vec<f64> {
    (0..config.n_exposures as u64)
        .map(|k| {
            let mut rng = substream(config.seed, &[STREAM_LOSS, 0, k]);
            let ead = q_ead(rng.random_range(20.0..200.0));
            ead * q_lgd(config.lgd + 0.3 * (rng.random::<f64>() - 0.5))
        })
        .collect()
}

fn period_defaults(config: &ScenarioConfig, n: usize, t: usize) -> (rand_chacha::ChaCha8Rng, usize) {
    let mut rng = substream(config.seed, &[STREAM_LOSS, 1, t as u64]);
    let pd = if config.correlation == 0.0 {
        config.period_pd
    } else {
        let z: f64 = StandardNormal.sample(&mut rng);
        conditional_pd(config.period_pd, config.correlation, z)
    };
    let k = Binomial::new(n as u64, pd).expect("pd in (0, 1)").sample(&mut rng) as usize;
    (rng, k)
}

/// Default counts per period for a homogeneous book of `n_exposures`.
pub fn default_counts(config: &ScenarioConfig, periods: usize) -> Vec<usize> {
    (1..=periods)
        .map(|t| period_defaults(config, config.n_exposures, t).1)
        .collect()
}

/// Per-period losses of a static book with homogeneous period PD: the
/// number of defaults is binomial (mixed over the common factor when
/// correlated) and the defaulters are a uniform subset of the book.
pub fn simulate_loss_series(config: &ScenarioConfig, weights: &[f64], periods: usize) -> Vec<f64> {
    (1..=periods)
        .map(|t| {
            let (mut rng, k) = period_defaults(config, weights.len(), t);
            let mut picked = index::sample(&mut rng, weights.len(), k).into_vec();
            picked.sort_unstable();
            picked.iter().map(|&j| weights[j]).sum()
        })
        .collect()
}
