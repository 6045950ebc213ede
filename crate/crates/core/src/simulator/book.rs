use rand::Rng;
use rayon::prelude::*;

use super::{q_ead, ScenarioConfig, STREAM_BOOK};
use crate::cashflow::{solve_effective_rate, LoanContract};
use crate::rng::substream;
use crate::valuation::{gca_trajectory, normalize_profile, RiskProfile};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct BookExposure {
    pub contract: LoanContract,
    pub profile: RiskProfile,
    pub amortizing: bool,
    /// Period (1-based) in which the exposure defaults on its true path.
    pub default_period: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Book {
    pub exposures: Vec<BookExposure>,
}

fn bullet_flows(principal: f64, rate: f64, term: usize) -> Vec<f64> {
    let mut flows = vec![principal * rate; term];
    flows[term - 1] += principal;
    flows
}

fn annuity_flows(principal: f64, rate: f64, term: usize) -> Vec<f64> {
    let payment = if rate == 0.0 {
        principal / term as f64
    } else {
        principal * rate / (1.0 - (1.0 + rate).powi(-(term as i32)))
    };
    vec![payment; term]
}

/// Contracts with profiles of the configured shape, each normalized to the
/// configured risk level, plus a default time drawn from the profile's
/// conditional default rates `r_t / LGD`.
pub fn generate_book(config: &ScenarioConfig) -> Result<Book> {
    config.validate()?;
    let rate = config.period_rate();
    let risk = config.period_risk_level(config.risk_level);
    let shape = config.hazard_shape.weights(config.term);
    let exposures = (0..config.n_exposures)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(config.seed, &[STREAM_BOOK, j as u64]);
            let principal = q_ead(rng.random_range(50.0..150.0));
            let amortizing = rng.random::<f64>() < config.amortizing_share;
            let flows = if amortizing {
                annuity_flows(principal, rate, config.term)
            } else {
                bullet_flows(principal, rate, config.term)
            };
            let contract = LoanContract::new(format!("L{j:05}"), principal, flows, config.period_unit)?;
            let i = solve_effective_rate(&contract)?.rate;
            let gca = gca_trajectory(&contract, i)?;
            let profile = if risk > 0.0 {
                normalize_profile(&shape, risk, &gca, i - risk)?
            } else {
                RiskProfile::zero(config.term)
            };
            let absolute = profile.absolute(&gca);
            let mut default_period = None;
            for (t, r) in absolute.iter().enumerate() {
                let hazard = if config.lgd > 0.0 { (r / config.lgd).min(1.0) } else { 0.0 };
                if rng.random::<f64>() < hazard {
                    default_period = Some(t + 1);
                    break;
                }
            }
            Ok(BookExposure {
                contract,
                profile,
                amortizing,
                default_period,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Book { exposures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::HazardShape;
    use approx::assert_abs_diff_eq;

    #[test]
    fn neutral_book_has_neutral_profiles() {
        let config = ScenarioConfig {
            n_exposures: 20,
            ..Default::default()
        };
        let book = generate_book(&config).unwrap();
        let r = config.period_risk_level(config.risk_level);
        for e in &book.exposures {
            let i = solve_effective_rate(&e.contract).unwrap().rate;
            let gca = gca_trajectory(&e.contract, i).unwrap();
            for (t, loss) in e.profile.expected_losses().iter().enumerate() {
                assert_abs_diff_eq!(*loss, r * gca[t], epsilon = 1e-12 * gca[0]);
            }
        }
    }

    #[test]
    fn same_seed_same_book() {
        let config = ScenarioConfig {
            n_exposures: 50,
            ..Default::default()
        };
        assert_eq!(generate_book(&config).unwrap(), generate_book(&config).unwrap());
        let other = ScenarioConfig { seed: 43, ..config.clone() };
        assert_ne!(generate_book(&config).unwrap(), generate_book(&other).unwrap());
    }

    #[test]
    fn bullet_shape_defaults_late() {
        let base = ScenarioConfig {
            n_exposures: 20_000,
            risk_level: 0.03,
            term: 10,
            ..Default::default()
        };
        let mean_default = |shape| {
            let book = generate_book(&ScenarioConfig {
                hazard_shape: shape,
                ..base.clone()
            })
            .unwrap();
            let times: Vec<f64> = book
                .exposures
                .iter()
                .filter_map(|e| e.default_period.map(|t| t as f64))
                .collect();
            times.iter().sum::<f64>() / times.len() as f64
        };
        let neutral = mean_default(HazardShape::Neutral);
        let bullet = mean_default(HazardShape::Bullet);
        assert!(bullet > neutral + 1.5, "bullet {bullet} vs neutral {neutral}");
    }

    #[test]
    fn zero_risk_means_no_defaults() {
        let config = ScenarioConfig {
            n_exposures: 100,
            risk_level: 0.0,
            ..Default::default()
        };
        let book = generate_book(&config).unwrap();
        assert!(book.exposures.iter().all(|e| e.default_period.is_none()));
    }
}
