//! Step-size schedules for the outer stochastic-approximation loop and the
//! inner gradient-descent step counts.

use crate::error::{Error, Result};

/// Outer step sizes `gamma_k`, clamped to (0, 1].
///
/// The harmonic family satisfies the divergent-sum / summable-squares
/// condition (Assumption 4); the constant schedule does not and exists for
/// diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Harmonic { c: f64, k0: f64 },
    Constant { gamma: f64 },
}

impl Schedule {
    pub fn harmonic(c: f64, k0: f64) -> Result<Self> {
        if !(c > 0.0) || !(k0 >= 1.0) {
            return Err(Error::invalid(format!(
                "harmonic schedule needs c > 0 and k0 >= 1, got c = {c}, k0 = {k0}"
            )));
        }
        Ok(Schedule::Harmonic { c, k0 })
    }

    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "constant schedule needs gamma in (0, 1], got {gamma}"
            )));
        }
        Ok(Schedule::Constant { gamma })
    }

    pub fn value(&self, k: usize) -> f64 {
        match *self {
            Schedule::Harmonic { c, k0 } => (c / (k as f64 + k0)).min(1.0),
            Schedule::Constant { gamma } => gamma,
        }
    }

    /// Whether the schedule satisfies Assumption 4.
    pub fn robbins_monro(&self) -> bool {
        matches!(self, Schedule::Harmonic { .. })
    }

    /// Schedules that knowingly violate Assumption 4 but are allowed to run
    /// for diagnostics.
    pub fn diagnostic_only(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }
}

/// Inner gradient-descent step counts `eta_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaSchedule {
    /// `eta_k = a + b * k`; grows without bound.
    Linear { a: usize, b: usize },
    /// `eta_k = a * ceil(log2(k + 2))`; grows without bound.
    Log { a: usize },
    /// `eta_k = c`; violates Assumption 7, diagnostics only.
    Constant { c: usize },
}

impl EtaSchedule {
    pub fn linear(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::invalid("linear eta schedule needs positive a and b"));
        }
        Ok(EtaSchedule::Linear { a, b })
    }

    pub fn log(a: usize) -> Result<Self> {
        if a == 0 {
            return Err(Error::invalid("log eta schedule needs positive a"));
        }
        Ok(EtaSchedule::Log { a })
    }

    pub fn constant(c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::invalid("constant eta schedule needs positive c"));
        }
        Ok(EtaSchedule::Constant { c })
    }

    pub fn value(&self, k: usize) -> usize {
        match *self {
            EtaSchedule::Linear { a, b } => a + b * k,
            EtaSchedule::Log { a } => a * ceil_log2(k as u64 + 2) as usize,
            EtaSchedule::Constant { c } => c,
        }
    }

    /// Whether the step counts grow without bound (Assumption 7).
    pub fn growing(&self) -> bool {
        !matches!(self, EtaSchedule::Constant { .. })
    }

    pub fn diagnostic_only(&self) -> bool {
        matches!(self, EtaSchedule::Constant { .. })
    }
}

fn ceil_log2(n: u64) -> u32 {
    debug_assert!(n >= 1);
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        let s = Schedule::harmonic(1.0, 1.0).unwrap();
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(1), 0.5);
        assert!((s.value(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.robbins_monro());
    }

    #[test]
    fn harmonic_clamps_to_one() {
        let s = Schedule::harmonic(2.0, 1.0).unwrap();
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(3), 0.5);
    }

    #[test]
    fn constant_is_diagnostic_only() {
        let s = Schedule::constant(0.1).unwrap();
        for k in [0, 10, 1000] {
            assert_eq!(s.value(k), 0.1);
        }
        assert!(!s.robbins_monro());
        assert!(s.diagnostic_only());
    }

    #[test]
    fn schedules_reject_bad_parameters() {
        assert!(Schedule::harmonic(0.0, 1.0).is_err());
        assert!(Schedule::harmonic(1.0, 0.5).is_err());
        assert!(Schedule::constant(0.0).is_err());
        assert!(Schedule::constant(1.5).is_err());
        assert!(EtaSchedule::linear(0, 1).is_err());
        assert!(EtaSchedule::log(0).is_err());
        assert!(EtaSchedule::constant(0).is_err());
    }

    #[test]
    fn eta_linear_values() {
        let e = EtaSchedule::linear(1, 1).unwrap();
        assert_eq!(e.value(0), 1);
        assert_eq!(e.value(5), 6);
        assert!(e.growing());
    }

    #[test]
    fn eta_log_values() {
        let e = EtaSchedule::log(2).unwrap();
        assert_eq!(e.value(0), 2); // 2 * ceil(log2 2) = 2
        assert_eq!(e.value(6), 6); // 2 * ceil(log2 8) = 6
        assert!(e.growing());
    }

    #[test]
    fn eta_constant_not_growing() {
        let e = EtaSchedule::constant(3).unwrap();
        assert_eq!(e.value(0), 3);
        assert_eq!(e.value(100), 3);
        assert!(!e.growing());
        assert!(e.diagnostic_only());
    }
}
