use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ScenarioConfig, STREAM_NPL_INFLOW, STREAM_POOL, STREAM_RECOVERY};
use crate::npl::{NplPosition, PoolState, StaticPool, Unwinding};
use crate::rng::substream;
use crate::{Error, Result};

/// Expected recoveries of one defaulted exposure, by source. Entry `k` is
/// due `k + 1` periods after default, in nominal terms.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryPath {
    pub id: String,
    pub default_period: usize,
    pub gca: f64,
    pub collateral: f64,
    pub lgd_unsecured: f64,
    pub guarantor_pd: f64,
    /// Periods after default at which the exposure cures.
    pub cure_after: Option<usize>,
    pub coll: Vec<f64>,
    pub unsec: Vec<f64>,
    pub gtee: Vec<f64>,
}

impl RecoveryPath {
    pub fn expected_total(&self) -> Vec<f64> {
        (0..self.coll.len())
            .map(|k| self.coll[k] + self.unsec[k] + self.gtee[k])
            .collect()
    }
}

/// One row of the observation table behind a vintage.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolObservation {
    pub pool: String,
    pub position: NplPosition,
    pub as_of: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolSimulation {
    pub pool: StaticPool,
    pub paths: Vec<RecoveryPath>,
    pub observations: Vec<PoolObservation>,
    /// Recoveries cut back so that the net amount stays below the gross.
    pub clamped: usize,
}

fn draw_path(config: &ScenarioConfig, rng: &mut ChaCha8Rng, id: String, default_period: usize) -> RecoveryPath {
    let ppy = config.period_unit.periods_per_year() as usize;
    let gca = rng.random_range(20.0..200.0);
    let collateral = if rng.random::<f64>() < config.collateral_share {
        gca * rng.random_range(0.2..0.6)
    } else {
        0.0
    };
    let guarantor_pd = if rng.random::<f64>() < config.guarantee_share {
        config.guarantor_pd
    } else {
        1.0
    };
    let cure_after = (rng.random::<f64>() < config.cure_share)
        .then(|| ppy * (1 + rng.random_range(0..3usize)));
    let lgd = config.lgd;
    let exposed = gca - collateral;
    let unsecured_loss = lgd * exposed;
    let unsec_value = exposed - unsecured_loss;
    let gtee_value = unsecured_loss - guarantor_pd * unsecured_loss;

    // Expected recoveries are set in nominal terms; their sum never exceeds
    // the gross amount, so the expected loss stays non-negative throughout.
    let timing = &config.recovery_timing;
    let coll_at = ppy * config.collateral_lag.max(1);
    let unsec_last = ppy * timing.len();
    let len = match cure_after {
        Some(c) => c + 2 * ppy,
        None => coll_at.max(unsec_last),
    };
    let mut coll = vec![0.0; len];
    let mut unsec = vec![0.0; len];
    let mut gtee = vec![0.0; len];
    match cure_after {
        // A cure repays the recoverable amount two years later.
        Some(_) => {
            coll[len - 1] = collateral;
            unsec[len - 1] = unsec_value;
            gtee[len - 1] = gtee_value;
        }
        None => {
            coll[coll_at - 1] = collateral;
            for (j, f) in timing.iter().enumerate() {
                unsec[ppy * (j + 1) - 1] += f * unsec_value;
            }
            gtee[unsec_last - 1] = gtee_value;
        }
    }
    RecoveryPath {
        id,
        default_period,
        gca,
        collateral,
        lgd_unsecured: lgd,
        guarantor_pd,
        cure_after,
        coll,
        unsec,
        gtee,
    }
}

/// Tracks one exposure through its workout.
#[derive(Debug, Clone)]
struct Workout {
    key: u64,
    path: RecoveryPath,
    gca: f64,
    age: usize,
    done: bool,
}

fn pv_after(stream: &[f64], age: usize, rate: f64) -> f64 {
    let v = 1.0 / (1.0 + rate);
    stream
        .iter()
        .skip(age)
        .rev()
        .fold(0.0, |acc, x| (acc + x) * v)
}

impl Workout {
    fn new(key: u64, path: RecoveryPath) -> Self {
        Self {
            key,
            gca: path.gca,
            path,
            age: 0,
            done: false,
        }
    }

    fn parts(&self, rate: f64) -> (f64, f64, f64) {
        (
            pv_after(&self.path.coll, self.age, rate),
            pv_after(&self.path.unsec, self.age, rate),
            pv_after(&self.path.gtee, self.age, rate),
        )
    }

    fn position(&self, rate: f64, wo: f64) -> NplPosition {
        let (coll, unsec, gtee) = self.parts(rate);
        let coll = coll.min(self.gca);
        let exposed = self.gca - coll;
        let unsecured_loss = (exposed - unsec).max(0.0);
        let el = (self.gca - coll - unsec - gtee).max(0.0);
        let lgd = if exposed > 0.0 { (unsecured_loss / exposed).min(1.0) } else { 0.0 };
        let pd = if unsecured_loss > 0.0 {
            (el / unsecured_loss).min(1.0)
        } else {
            self.path.guarantor_pd
        };
        NplPosition {
            id: self.path.id.clone(),
            gca: self.gca,
            collateral: coll,
            lgd_unsecured: lgd,
            guarantor_pd: pd,
            cured: self.path.cure_after.is_some_and(|c| self.age >= c),
            wo_in_period: wo,
        }
    }

    /// Advances one period; returns the write-off and whether the realized
    /// recovery had to be cut back.
    fn advance(&mut self, config: &ScenarioConfig, rate: f64, period: usize) -> (f64, bool) {
        let k = self.age;
        self.age += 1;
        let mut rng = substream(config.seed, &[STREAM_RECOVERY, self.key, period as u64]);
        let mut noise = || {
            let half_width = config.recovery_noise * 3f64.sqrt();
            1.0 + half_width * (2.0 * rng.random::<f64>() - 1.0)
        };
        let lgd = self.path.lgd_unsecured;
        let unsec_factor = if lgd < 1.0 {
            ((1.0 - lgd * config.lgd_bias) / (1.0 - lgd)).max(0.0)
        } else {
            1.0
        };
        let at = |s: &[f64]| s.get(k).copied().unwrap_or(0.0);
        let mut realized = at(&self.path.coll) * noise()
            + at(&self.path.unsec) * unsec_factor * noise()
            + at(&self.path.gtee) * noise();
        let (c, u, g) = self.parts(rate);
        let ceiling = (self.gca - (c + u + g)).max(0.0);
        let clamped = realized > ceiling;
        if clamped {
            realized = ceiling;
        }
        self.gca -= realized;
        let remaining = self.age < self.path.coll.len();
        let mut wo = 0.0;
        if !remaining {
            wo = self.gca.max(0.0);
            self.gca = 0.0;
            self.done = true;
        }
        (wo, clamped)
    }

    /// Scales the outstanding expected unsecured recoveries.
    fn revise_unsecured(&mut self, factor: f64) {
        for x in self.path.unsec.iter_mut().skip(self.age) {
            *x *= factor;
        }
    }
}

/// A static pool of `n_exposures` defaults at period 0, observed over
/// `periods` periods. Recoveries follow the configured timing, collateral
/// lag, cure share, LGD bias and noise.
pub fn simulate_static_pool(config: &ScenarioConfig) -> Result<PoolSimulation> {
    config.validate()?;
    let rate = config.period_rate();
    let mut workouts: Vec<Workout> = (0..config.n_exposures as u64)
        .map(|key| {
            let mut rng = substream(config.seed, &[STREAM_POOL, key]);
            Workout::new(key, draw_path(config, &mut rng, format!("D{key:06}"), 0))
        })
        .collect();
    let paths: Vec<RecoveryPath> = workouts.iter().map(|w| w.path.clone()).collect();
    let mut pool = StaticPool::new(
        (0, 0),
        paths.iter().map(|p| p.id.clone()),
        rate,
        Unwinding::NetOnly,
    );
    let mut observations = Vec::new();
    let mut clamped = 0;
    let mut record = |pool: &mut StaticPool, t: usize, positions: Vec<NplPosition>| -> Result<()> {
        observations.extend(positions.iter().map(|p| PoolObservation {
            pool: "P0".into(),
            position: p.clone(),
            as_of: t as i64,
        }));
        pool.push(PoolState::new(t as i64, positions)?)
    };
    let initial = workouts.iter().map(|w| w.position(rate, 0.0)).collect();
    record(&mut pool, 0, initial)?;
    for t in 1..=config.periods {
        let mut positions = Vec::new();
        for w in workouts.iter_mut().filter(|w| !w.done) {
            let (wo, cut) = w.advance(config, rate, t);
            clamped += cut as usize;
            positions.push(w.position(rate, wo));
        }
        record(&mut pool, t, positions)?;
    }
    Ok(PoolSimulation {
        pool,
        paths,
        observations,
        clamped,
    })
}

/// Open NPL book: `new_volume` defaults flow in every period, each worked
/// out like a pool member. An optional one-time revision scales all
/// outstanding unsecured expectations (and the recoveries that follow).
pub fn simulate_npl_book(config: &ScenarioConfig) -> Result<Vec<PoolState>> {
    config.validate()?;
    if config.new_volume == 0 {
        return Err(Error::Config("an open NPL book needs new_volume > 0".into()));
    }
    let rate = config.period_rate();
    let mut book: Vec<Workout> = Vec::new();
    let mut states = Vec::with_capacity(config.periods + 1);
    for t in 0..=config.periods {
        let mut positions = Vec::new();
        if t > 0 {
            if let Some(adj) = config.lgd_adjustment.filter(|a| a.period == t) {
                book.iter_mut().for_each(|w| w.revise_unsecured(adj.factor));
            }
            for w in book.iter_mut() {
                let (wo, _) = w.advance(config, rate, t);
                positions.push(w.position(rate, wo));
            }
            book.retain(|w| !w.done);
        }
        for k in 0..config.new_volume {
            let key = (t * config.new_volume + k) as u64;
            let mut rng = substream(config.seed, &[STREAM_NPL_INFLOW, key]);
            let path = draw_path(config, &mut rng, format!("N{key:07}"), t);
            let w = Workout::new(key, path);
            positions.push(w.position(rate, 0.0));
            book.push(w);
        }
        states.push(PoolState::new(t as i64, positions)?);
    }
    Ok(states)
}
