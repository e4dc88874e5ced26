use crate::error::{Error, Result};

/// Probability of a σz flip after storing a qubit for `t` seconds in a memory
/// with dephasing time `dephasing_time`: `(1 - exp(-t/T)) / 2`.
pub fn dephasing_lambda(t: f64, dephasing_time: f64) -> Result<f64> {
    if !(dephasing_time > 0.0) || !dephasing_time.is_finite() {
        return Err(Error::param(
            "dephasing_time",
            format!("{dephasing_time} must be positive"),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("{t} must be a nonnegative duration")));
    }
    Ok(lambda_unchecked(t / dephasing_time))
}

#[inline]
pub(crate) fn lambda_unchecked(ratio: f64) -> f64 {
    -(-ratio).exp_m1() / 2.0
}

/// `ρ ↦ (1-λ)ρ + λ σz ρ σz`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DephasingChannel {
    lambda: f64,
}

impl DephasingChannel {
    pub const IDENTITY: DephasingChannel = DephasingChannel { lambda: 0.0 };

    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&lambda) {
            return Err(Error::param("lambda", format!("{lambda} is outside [0, 1/2]")));
        }
        Ok(DephasingChannel { lambda })
    }

    pub fn after(t: f64, dephasing_time: f64) -> Result<Self> {
        dephasing_lambda(t, dephasing_time).map(|lambda| DephasingChannel { lambda })
    }

    pub fn lambda(self) -> f64 {
        self.lambda
    }

    /// Sequential application of two dephasing channels.
    pub fn compose(self, other: DephasingChannel) -> DephasingChannel {
        compose_dephasing(self, other)
    }
}

pub fn compose_dephasing(a: DephasingChannel, b: DephasingChannel) -> DephasingChannel {
    let lambda = a.lambda + b.lambda - 2.0 * a.lambda * b.lambda;
    // rounding can push the sum a hair past 1/2
    DephasingChannel {
        lambda: lambda.clamp(0.0, 0.5),
    }
}

/// Converts ledger times (rounds) into flip probabilities.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct MemoryModel {
    /// Seconds.
    pub dephasing_time: f64,
    /// Seconds per protocol round.
    pub round_duration: f64,
}

impl MemoryModel {
    pub fn new(dephasing_time: f64, round_duration: f64) -> Result<Self> {
        if !(dephasing_time > 0.0) || !dephasing_time.is_finite() {
            return Err(Error::param(
                "dephasing_time",
                format!("{dephasing_time} must be positive"),
            ));
        }
        if !(round_duration > 0.0) || !round_duration.is_finite() {
            return Err(Error::param(
                "round_duration",
                format!("{round_duration} must be positive"),
            ));
        }
        Ok(MemoryModel {
            dephasing_time,
            round_duration,
        })
    }

    /// A model whose ledger is already expressed in seconds.
    pub fn seconds(dephasing_time: f64) -> Result<Self> {
        Self::new(dephasing_time, 1.0)
    }

    pub fn lambda(&self, rounds: f64) -> f64 {
        lambda_unchecked(rounds * self.round_duration / self.dephasing_time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lambda_endpoints() {
        assert_eq!(dephasing_lambda(0.0, 10.0).unwrap(), 0.0);
        assert_abs_diff_eq!(dephasing_lambda(1e6, 10.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            dephasing_lambda(10.0, 10.0).unwrap(),
            0.316_060_279_414_278_6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn lambda_rejects_bad_inputs() {
        assert!(dephasing_lambda(-1.0, 10.0).is_err());
        assert!(dephasing_lambda(1.0, 0.0).is_err());
        assert!(dephasing_lambda(1.0, -3.0).is_err());
        assert!(dephasing_lambda(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn composition_identities() {
        let x = DephasingChannel::new(0.2).unwrap();
        assert_eq!(compose_dephasing(DephasingChannel::IDENTITY, x), x);
        let full = DephasingChannel::new(0.5).unwrap();
        assert_abs_diff_eq!(compose_dephasing(full, x).lambda(), 0.5, epsilon = 1e-15);
        let a = DephasingChannel::after(3.0, 10.0).unwrap();
        let b = DephasingChannel::after(7.0, 10.0).unwrap();
        let ab = DephasingChannel::after(10.0, 10.0).unwrap();
        assert_abs_diff_eq!(a.compose(b).lambda(), ab.lambda(), epsilon = 1e-15);
    }

    #[test]
    fn channel_rejects_out_of_range() {
        assert!(DephasingChannel::new(0.51).is_err());
        assert!(DephasingChannel::new(-0.01).is_err());
    }

    proptest! {
        #[test]
        fn semigroup(t1 in 0.0f64..100.0, t2 in 0.0f64..100.0, big_t in 0.1f64..50.0) {
            let a = DephasingChannel::after(t1, big_t).unwrap();
            let b = DephasingChannel::after(t2, big_t).unwrap();
            let sum = DephasingChannel::after(t1 + t2, big_t).unwrap();
            prop_assert!((a.compose(b).lambda() - sum.lambda()).abs() < 1e-12);
        }

        #[test]
        fn lambda_monotone_and_bounded(t1 in 0.0f64..100.0, dt in 0.0f64..100.0, big_t in 0.1f64..50.0) {
            let l1 = dephasing_lambda(t1, big_t).unwrap();
            let l2 = dephasing_lambda(t1 + dt, big_t).unwrap();
            prop_assert!(l1 <= l2);
            prop_assert!((0.0..=0.5).contains(&l2));
        }
    }
}
