//! Raw rate, BB84 secret key fraction and secret key rate.
//!
//! The secret key fraction is evaluated on the *mean* QBERs of a run, not
//! averaged per sample. Standard errors of the means come from the sample
//! covariance; the error of the key rate is propagated with the delta method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signal speed in optical fibre.
pub const SPEED_IN_FIBER_M_PER_S: f64 = 2e8;

/// `exp(-L0 / L_att)`.
pub fn generation_probability(segment_length_km: f64, attenuation_length_km: f64) -> f64 {
    (-segment_length_km / attenuation_length_km).exp()
}

/// One round: a photon to the midpoint of a segment and the herald back,
/// `2 L0 / ν`.
pub fn round_duration_s(segment_length_km: f64) -> f64 {
    2.0 * segment_length_km * 1e3 / SPEED_IN_FIBER_M_PER_S
}

pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is not a probability")));
    }
    Ok(entropy(q))
}

fn entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// `dh/dq`; infinite at the endpoints.
fn entropy_slope(q: f64) -> f64 {
    ((1.0 - q) / q).log2()
}

/// `max(1 - h(e_x) - h(e_z), 0)`. Inputs are clamped to `[0, 1]`.
pub fn secret_key_fraction(e_x: f64, e_z: f64) -> f64 {
    (1.0 - entropy(e_x.clamp(0.0, 1.0)) - entropy(e_z.clamp(0.0, 1.0))).max(0.0)
}

/// `1 / (mean_rounds · 2 L0 / ν)` in Hz.
pub fn raw_rate(mean_rounds: f64, segment_length_km: f64) -> f64 {
    1.0 / (mean_rounds * round_duration_s(segment_length_km))
}

/// Running means and co-moments of `(rounds, e_x, e_z)`. Partial
/// accumulators merge exactly (up to rounding), so parallel chunks can be
/// combined in any grouping.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: [f64; 3],
    /// Sums of products of deviations from the mean.
    pub comoment: [[f64; 3]; 3],
}

impl Moments {
    pub fn push(&mut self, x: [f64; 3]) {
        self.count += 1;
        let n = self.count as f64;
        let before = self.mean;
        for i in 0..3 {
            self.mean[i] += (x[i] - before[i]) / n;
        }
        for i in 0..3 {
            for j in 0..3 {
                self.comoment[i][j] += (x[i] - before[i]) * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: [f64; 3] = std::array::from_fn(|i| other.mean[i] - self.mean[i]);
        for i in 0..3 {
            for j in 0..3 {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, d) in self.mean.iter_mut().zip(delta) {
            *m += d * nb / n;
        }
        self.count += other.count;
    }

    /// Sample covariance (zero for fewer than two samples).
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        if self.count < 2 {
            return [[0.0; 3]; 3];
        }
        let d = (self.count - 1) as f64;
        self.comoment.map(|row| row.map(|c| c / d))
    }

    /// Standard errors of the three means.
    pub fn standard_errors(&self) -> [f64; 3] {
        let cov = self.covariance();
        let n = self.count.max(1) as f64;
        std::array::from_fn(|i| (cov[i][i].max(0.0) / n).sqrt())
    }
}

impl FromIterator<[f64; 3]> for Moments {
    fn from_iter<I: IntoIterator<Item = [f64; 3]>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub samples: u64,
    pub mean_rounds: f64,
    pub se_rounds: f64,
    pub mean_e_x: f64,
    pub se_e_x: f64,
    pub mean_e_z: f64,
    pub se_e_z: f64,
    /// Hz.
    pub raw_rate: f64,
    pub secret_key_fraction: f64,
    /// Hz.
    pub secret_key_rate: f64,
    /// Delta-method standard error of the secret key rate, Hz.
    pub se_secret_key_rate: f64,
}

impl RunStatistics {
    pub fn from_moments(m: &Moments, segment_length_km: f64) -> Result<Self> {
        if m.count == 0 {
            return Err(Error::EmptySamples);
        }
        if !(segment_length_km > 0.0) {
            return Err(Error::param(
                "segment_length_km",
                format!("{segment_length_km} must be positive"),
            ));
        }
        let [rounds, e_x, e_z] = m.mean;
        let [se_rounds, se_e_x, se_e_z] = m.standard_errors();
        let rate = raw_rate(rounds, segment_length_km);
        let fraction = secret_key_fraction(e_x, e_z);
        let key_rate = rate * fraction;

        // gradient of S = R(rounds) r(e_x, e_z) at the means
        let grad = if fraction > 0.0 {
            [
                -key_rate / rounds,
                -rate * entropy_slope(e_x),
                -rate * entropy_slope(e_z),
            ]
        } else {
            [0.0; 3]
        };
        let cov = m.covariance();
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                // a QBER pinned at zero has no spread; skip its infinite slope
                if cov[i][j] != 0.0 {
                    var += grad[i] * cov[i][j] * grad[j];
                }
            }
        }
        let se_key_rate = (var.max(0.0) / m.count as f64).sqrt();

        Ok(RunStatistics {
            samples: m.count,
            mean_rounds: rounds,
            se_rounds,
            mean_e_x: e_x,
            se_e_x,
            mean_e_z: e_z,
            se_e_z,
            raw_rate: rate,
            secret_key_fraction: fraction,
            secret_key_rate: key_rate,
            se_secret_key_rate: se_key_rate,
        })
    }
}

/// Statistics of `(rounds, e_x, e_z)` samples.
pub fn aggregate(samples: &[(f64, f64, f64)], segment_length_km: f64) -> Result<RunStatistics> {
    let m: Moments = samples.iter().map(|&(r, x, z)| [r, x, z]).collect();
    RunStatistics::from_moments(&m, segment_length_km)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), 0.499_915_958, epsilon = 1e-6);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn key_fraction_values() {
        assert_eq!(secret_key_fraction(0.0, 0.0), 1.0);
        assert_eq!(secret_key_fraction(0.5, 0.0), 0.0);
        assert_abs_diff_eq!(
            secret_key_fraction(0.05, 0.05),
            0.427_206_085_768_087_5,
            epsilon = 1e-12
        );
        assert_eq!(secret_key_fraction(0.2, 0.2), 0.0);
    }

    #[test]
    fn raw_rate_values() {
        assert_relative_eq!(raw_rate(1.0, 1.0), 1e5, max_relative = 1e-12);
        assert_relative_eq!(raw_rate(2.0, 1.0), 5e4, max_relative = 1e-12);
        assert_relative_eq!(raw_rate(8.0 / 3.0, 22.0), 1_704.545_454_545, max_relative = 1e-9);
    }

    #[test]
    fn generation_probability_at_one_attenuation_length() {
        assert_relative_eq!(generation_probability(22.0, 22.0), 0.367_879_441, max_relative = 1e-8);
    }

    #[test]
    fn aggregate_uses_mean_qbers() {
        let s = aggregate(&[(1.0, 0.0, 0.0)], 1.0).unwrap();
        assert_relative_eq!(s.secret_key_rate, 1e5, max_relative = 1e-12);
        assert_eq!(s.se_rounds, 0.0);

        let s = aggregate(&[(1.0, 0.0, 0.1), (1.0, 0.5, 0.1)], 1.0).unwrap();
        assert_abs_diff_eq!(s.mean_e_x, 0.25, epsilon = 1e-15);
        let expected = 1.0 - entropy(0.25) - entropy(0.1);
        assert_eq!(s.secret_key_fraction, expected.max(0.0));

        let s = aggregate(&[(3.0, 0.5, 0.5), (5.0, 0.5, 0.5)], 1.0).unwrap();
        assert_eq!(s.secret_key_rate, 0.0);
        assert!(s.raw_rate > 0.0);
        assert!(matches!(aggregate(&[], 1.0), Err(Error::EmptySamples)));
    }

    #[test]
    fn delta_method_matches_finite_differences() {
        let samples: Vec<(f64, f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64;
                (
                    2.0 + (t * 0.37).sin().abs() * 5.0,
                    0.02 + 0.01 * (t * 0.11).cos(),
                    0.01 + 0.005 * (t * 0.7).sin(),
                )
            })
            .collect();
        let s = aggregate(&samples, 10.0).unwrap();
        let m: Moments = samples.iter().map(|&(a, b, c)| [a, b, c]).collect();
        let f = |x: [f64; 3]| raw_rate(x[0], 10.0) * secret_key_fraction(x[1], x[2]);
        let grad: [f64; 3] = std::array::from_fn(|i| {
            let h = 1e-7 * m.mean[i].abs().max(1e-3);
            let mut up = m.mean;
            let mut down = m.mean;
            up[i] += h;
            down[i] -= h;
            (f(up) - f(down)) / (2.0 * h)
        });
        let cov = m.covariance();
        let var: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| grad[i] * cov[i][j] * grad[j])
            .sum();
        assert_relative_eq!(s.se_secret_key_rate, (var / 50.0).sqrt(), max_relative = 1e-5);
    }

    proptest! {
        #[test]
        fn merging_matches_sequential(xs in prop::collection::vec((1.0f64..100.0, 0.0f64..0.5, 0.0f64..0.5), 1..60), split in 0usize..60) {
            let all: Vec<[f64; 3]> = xs.iter().map(|&(a, b, c)| [a, b, c]).collect();
            let split = split.min(all.len());
            let whole: Moments = all.iter().copied().collect();
            let mut left: Moments = all[..split].iter().copied().collect();
            let right: Moments = all[split..].iter().copied().collect();
            left.merge(&right);
            prop_assert_eq!(left.count, whole.count);
            for i in 0..3 {
                prop_assert!((left.mean[i] - whole.mean[i]).abs() <= 1e-9 * (1.0 + whole.mean[i].abs()));
                for j in 0..3 {
                    prop_assert!((left.comoment[i][j] - whole.comoment[i][j]).abs() <= 1e-7 * (1.0 + whole.comoment[i][j].abs()));
                }
            }
        }

        #[test]
        fn key_rate_never_increases_with_qber(rounds in 1.0f64..100.0, ex in 0.0f64..0.5, ez in 0.0f64..0.5, d in 0.0f64..0.1) {
            let base = raw_rate(rounds, 5.0) * secret_key_fraction(ex, ez);
            prop_assert!(raw_rate(rounds, 5.0) * secret_key_fraction((ex + d).min(0.5), ez) <= base);
            prop_assert!(raw_rate(rounds, 5.0) * secret_key_fraction(ex, (ez + d).min(0.5)) <= base);
        }

        #[test]
        fn raw_rate_halves_when_rounds_double(rounds in 1.0f64..1e6, l0 in 0.1f64..100.0) {
            prop_assert!((raw_rate(2.0 * rounds, l0) * 2.0 - raw_rate(rounds, l0)).abs() <= 1e-12 * raw_rate(rounds, l0));
        }
    }
}
