//! Threshold quantities m0, g0, h0, the log-space bound ladder L1..L4 and the
//! sufficient conditions A1-A3 for a positive periodic solution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Denominator used for m0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum M0Denominator {
    /// `1 + w1 k1`.
    #[default]
    #[serde(rename = "k1")]
    K1,
    /// `1 + w1 k2`, the arithmetic of the published worked example.
    #[serde(rename = "k2-paper-variant")]
    K2PaperVariant,
}

/// One inequality `lhs < rhs`; `margin = rhs - lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Condition {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            holds: lhs < rhs,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

/// `true` means the coefficient is strictly positive on the audited interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositivityAudit {
    pub r1: bool,
    pub r2: bool,
    pub beta1: bool,
    pub beta2: bool,
}

impl PositivityAudit {
    pub fn all_positive(&self) -> bool {
        self.r1 && self.r2 && self.beta1 && self.beta2
    }

    /// Names of the coefficients that fail the audit.
    pub fn flagged(&self) -> Vec<&'static str> {
        [("r1", self.r1), ("r2", self.r2), ("beta1", self.beta1), ("beta2", self.beta2)]
            .into_iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n)
            .collect()
    }
}

/// Derived quantities and verdicts. Log bounds of non-positive arguments are
/// `None` (serialized as `null`); the arguments themselves stay in `g0`, `h0`, `m0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BoundReport {
    pub extremum_interval: [f64; 2],
    pub m0_denominator: M0Denominator,
    pub r1L: f64,
    pub r1M: f64,
    pub r2L: f64,
    pub r2M: f64,
    pub beta1M: f64,
    pub beta2M: f64,
    pub k2_r2M: f64,
    pub one_plus_w1k1: f64,
    pub m0: f64,
    pub m0_canonical: f64,
    pub m0_paper_variant: f64,
    pub beta1M_m0: f64,
    pub r2L_k2: f64,
    pub a3_rhs: f64,
    pub g0: f64,
    pub h0: f64,
    pub L1: f64,
    pub L2: Option<f64>,
    pub L3: Option<f64>,
    pub L4: Option<f64>,
    pub Lambda1: Option<f64>,
    pub Lambda2: Option<f64>,
    pub Lambda3: f64,
    pub Lambda: Option<f64>,
    pub A1: Condition,
    pub A2: Condition,
    pub A3: Condition,
    pub positivity_audit: PositivityAudit,
    pub positivity_full_period: PositivityAudit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ConditionCheck {
    pub A1: Condition,
    pub A2: Condition,
    pub A3: Condition,
}

impl ConditionCheck {
    pub fn all_hold(&self) -> bool {
        self.A1.holds && self.A2.holds && self.A3.holds
    }

    pub fn margins(&self) -> [f64; 3] {
        [self.A1.margin, self.A2.margin, self.A3.margin]
    }
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.conditions().all_hold()
    }

    pub fn conditions(&self) -> ConditionCheck {
        ConditionCheck {
            A1: self.A1,
            A2: self.A2,
            A3: self.A3,
        }
    }
}

/// Options for [`compute_bounds`]. `interval = None` means `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub interval: Option<[f64; 2]>,
    pub m0_denominator: M0Denominator,
    pub lambda3: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            interval: None,
            m0_denominator: M0Denominator::K1,
            lambda3: 1.0,
        }
    }
}

fn ln_positive(v: f64) -> Option<f64> {
    (v > 0.0).then(|| v.ln())
}

fn audit(params: &ModelParams, a: f64, b: f64) -> Result<PositivityAudit> {
    let pos = |c: &crate::PeriodicCoefficient| c.extrema(a, b).map(|(lo, _)| lo > 0.0);
    Ok(PositivityAudit {
        r1: pos(&params.r1)?,
        r2: pos(&params.r2)?,
        beta1: pos(&params.beta1)?,
        beta2: pos(&params.beta2)?,
    })
}

#[allow(non_snake_case)]
pub fn compute_bounds(params: &ModelParams, opts: &BoundOptions) -> Result<BoundReport> {
    params.validate()?;
    let period = params.period();
    let [a, b] = opts.interval.unwrap_or([0.0, period]);
    let (r1L, r1M) = params.r1.extrema(a, b)?;
    let (r2L, r2M) = params.r2.extrema(a, b)?;
    let (_, beta1M) = params.beta1.extrema(a, b)?;
    let (_, beta2M) = params.beta2.extrema(a, b)?;
    if r1L == 0.0 {
        return Err(Error::DegenerateParameters(
            "r1L = 0 makes g0 undefined".into(),
        ));
    }

    let (k1, k2, w1, w2) = (params.k1, params.k2, params.w1, params.w2);
    let k2_r2M = k2 * r2M;
    let one_plus_w1k1 = 1.0 + w1 * k1;
    let m0_canonical = k2_r2M / one_plus_w1k1;
    let m0_paper_variant = k2_r2M / (1.0 + w1 * k2);
    let m0 = match opts.m0_denominator {
        M0Denominator::K1 => m0_canonical,
        M0Denominator::K2PaperVariant => m0_paper_variant,
    };
    let beta1M_m0 = beta1M * m0;
    let g0 = k1 * (1.0 - beta1M_m0 / r1L);
    let r2L_k2 = r2L * k2;
    let a3_rhs = one_plus_w1k1 * (r2M + w2 * k2 * k1);
    if a3_rhs == 0.0 {
        return Err(Error::DegenerateParameters(
            "(1 + w1 k1)(r2M + w2 k2 k1) = 0 makes h0 undefined".into(),
        ));
    }
    let h0 = r2L_k2 / a3_rhs;

    let L1 = k1.ln();
    let L2 = ln_positive(g0);
    let L3 = ln_positive(m0);
    let L4 = ln_positive(h0);
    let Lambda1 = L2.map(|l2| L1.abs().max(l2.abs()));
    let Lambda2 = L3.zip(L4).map(|(l3, l4)| l3.abs().max(l4.abs()));
    let Lambda = Lambda1.zip(Lambda2).map(|(x, y)| x + y + opts.lambda3);

    let mut report = BoundReport {
        extremum_interval: [a, b],
        m0_denominator: opts.m0_denominator,
        r1L,
        r1M,
        r2L,
        r2M,
        beta1M,
        beta2M,
        k2_r2M,
        one_plus_w1k1,
        m0,
        m0_canonical,
        m0_paper_variant,
        beta1M_m0,
        r2L_k2,
        a3_rhs,
        g0,
        h0,
        L1,
        L2,
        L3,
        L4,
        Lambda1,
        Lambda2,
        Lambda3: opts.lambda3,
        Lambda,
        A1: Condition::new(0.0, 0.0),
        A2: Condition::new(0.0, 0.0),
        A3: Condition::new(0.0, 0.0),
        positivity_audit: audit(params, a, b)?,
        positivity_full_period: audit(params, 0.0, period)?,
    };
    let check = check_conditions(&report);
    report.A1 = check.A1;
    report.A2 = check.A2;
    report.A3 = check.A3;
    Ok(report)
}

/// A1: `k2 r2M < 1 + w1 k1`; A2: `beta1M m0 < r1L`;
/// A3: `r2L k2 < (1 + w1 k1)(r2M + w2 k2 k1)`.
pub fn check_conditions(report: &BoundReport) -> ConditionCheck {
    ConditionCheck {
        A1: Condition::new(report.k2_r2M, report.one_plus_w1k1),
        A2: Condition::new(report.beta1M_m0, report.r1L),
        A3: Condition::new(report.r2L_k2, report.a3_rhs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PeriodicCoefficient;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn example1_report(variant: M0Denominator) -> BoundReport {
        compute_bounds(
            &ModelParams::example1(),
            &BoundOptions {
                interval: Some([0.0, PI]),
                m0_denominator: variant,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn example1_quantities() {
        let r = example1_report(M0Denominator::K1);
        assert!((r.k2_r2M - 5.4006).abs() < 1e-12);
        assert_eq!(r.one_plus_w1k1, 161.0);
        assert!((r.a3_rhs - 15600.9161).abs() < 1e-9);
        assert!((r.m0 - 5.4006 / 161.0).abs() < 1e-15);
        assert!((r.m0 - 0.0335441).abs() < 1e-7);
        assert!((r.m0_paper_variant - 0.0446).abs() < 1e-4);
        assert!((r.L1 - 8f64.ln()).abs() < 1e-15);
        assert!((r.h0 - 3.846e-8).abs() < 1e-11);
        assert!((r.g0 - 3.5238753788819874).abs() < 1e-12);
        assert!((r.L4.unwrap() - -17.073665818620523).abs() < 1e-12);
        assert!(r.positivity_audit.all_positive());
        assert_eq!(r.positivity_full_period.flagged(), vec!["r1", "r2", "beta1", "beta2"]);
    }

    #[test]
    fn example1_conditions_with_paper_variant() {
        let r = example1_report(M0Denominator::K2PaperVariant);
        let c = check_conditions(&r);
        assert!(c.all_hold());
        assert!((r.beta1M_m0 - 0.0223).abs() < 1e-4);
        assert!((r.r1L - 0.03).abs() < 1e-15);
        assert!((r.r2L_k2 - 0.0006).abs() < 1e-15);
        assert!(c.A3.holds && c.A3.margin > 15600.0);
        assert_eq!(c.margins()[1], 0.03 - r.beta1M_m0);
    }

    #[test]
    fn scaled_beta1_breaks_a2() {
        let mut p = ModelParams::example1();
        p.beta1 = p.beta1.scaled(100.0);
        let r = compute_bounds(
            &p,
            &BoundOptions {
                interval: Some([0.0, PI]),
                m0_denominator: M0Denominator::K2PaperVariant,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.beta1M - 50.04).abs() < 1e-12);
        assert!(!r.A2.holds);
        assert!(r.A1.holds && r.A3.holds);
        assert!(r.g0 < 0.0 && r.L2.is_none() && r.Lambda1.is_none() && r.Lambda.is_none());
    }

    #[test]
    fn full_period_default_interval() {
        let r = compute_bounds(&ModelParams::example1(), &BoundOptions::default()).unwrap();
        assert_eq!(r.extremum_interval, [0.0, 2.0 * PI]);
        assert!((r.r2L - -0.8999).abs() < 1e-12);
        assert!(r.L4.is_none());
        assert!(!r.positivity_audit.all_positive());
    }

    #[test]
    fn zero_r1_minimum_is_degenerate() {
        let mut p = ModelParams::example1();
        p.r1 = PeriodicCoefficient::sinusoid(0.5, 0.5, 1.0);
        let err = compute_bounds(&p, &BoundOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateParameters(_)));
    }

    #[test]
    fn constant_coefficients_have_flat_extrema() {
        let r = compute_bounds(&ModelParams::remark_constant(), &BoundOptions::default()).unwrap();
        assert_eq!((r.r1L, r.r1M), (0.03, 0.03));
        assert_eq!((r.r2L, r.r2M), (0.0001, 0.0001));
        assert_eq!(r.beta1M, 0.0004);
    }

    #[test]
    fn report_json_field_names() {
        let r = example1_report(M0Denominator::K1);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "r1L", "r1M", "r2L", "r2M", "beta1M", "beta2M", "m0", "g0", "h0", "L1", "L2", "L3", "L4",
            "Lambda1", "Lambda2", "A1", "A2", "A3", "positivity_audit", "extremum_interval",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["m0_denominator"], "k1");
        let back: BoundReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn upper_bound_ordering_counterexample() {
        // L4 < L3 reduces to r2L < r2M (r2M + w2 k2 k1); it fails for a small
        // constant r2 with w2 = 0 even though A1-A3 hold
        let p = ModelParams {
            r1: PeriodicCoefficient::constant(1.0),
            r2: PeriodicCoefficient::constant(0.5),
            beta1: PeriodicCoefficient::constant(0.1),
            beta2: PeriodicCoefficient::constant(0.1),
            k1: 1.0,
            k2: 1.0,
            w1: 1.0,
            w2: 0.0,
        };
        let r = compute_bounds(&p, &BoundOptions::default()).unwrap();
        assert!(r.all_hold() && r.m0 > 0.0 && r.g0 > 0.0 && r.h0 > 0.0);
        assert!(r.L2.unwrap() < r.L1);
        assert!(r.L4.unwrap() > r.L3.unwrap());
    }

    fn positive_params() -> impl Strategy<Value = ModelParams> {
        let coef = || (0.05..2.0f64, 0.0..0.9f64).prop_map(|(m, frac)| PeriodicCoefficient::sinusoid(m, m * frac, 1.0));
        (coef(), coef(), coef(), coef(), 0.1..10.0f64, 0.1..10.0f64, 0.0..30.0f64, 0.0..5.0f64).prop_map(
            |(r1, r2, beta1, beta2, k1, k2, w1, w2)| ModelParams {
                r1,
                r2,
                beta1,
                beta2,
                k1,
                k2,
                w1,
                w2,
            },
        )
    }

    proptest! {
        #[test]
        fn a2_iff_g0_positive(p in positive_params()) {
            let r = compute_bounds(&p, &BoundOptions::default()).unwrap();
            prop_assert!(r.r1L > 0.0);
            prop_assert_eq!(r.A2.holds, r.g0 > 0.0);
            prop_assert_eq!(r.L2.is_some(), r.A2.holds);
        }

        #[test]
        fn bound_ordering(p in positive_params()) {
            let r = compute_bounds(&p, &BoundOptions::default()).unwrap();
            if r.all_hold() && r.g0 > 0.0 && r.h0 > 0.0 {
                prop_assert!(r.L2.unwrap() < r.L1);
                let ordered = r.L4.unwrap() < r.L3.unwrap();
                prop_assert_eq!(ordered, r.r2L < r.r2M * (r.r2M + p.w2 * p.k2 * p.k1));
            }
        }

        #[test]
        fn fear_lowers_m0(p in positive_params(), dw in 0.01..5.0f64) {
            let base = compute_bounds(&p, &BoundOptions::default()).unwrap();
            let more = ModelParams { w1: p.w1 + dw, ..p.clone() };
            let r = compute_bounds(&more, &BoundOptions::default()).unwrap();
            prop_assert!(r.m0 < base.m0);
            prop_assert!(r.A1.margin > base.A1.margin);
            prop_assert!(r.A2.margin > base.A2.margin);
        }

        #[test]
        fn r2_amplitude_raises_m0(p in positive_params(), da in 0.0..1.0f64) {
            let base = compute_bounds(&p, &BoundOptions::default()).unwrap();
            let r2 = match p.r2 {
                PeriodicCoefficient::Sinusoid { mean, amplitude, omega, phase } =>
                    PeriodicCoefficient::Sinusoid { mean, amplitude: amplitude + da, omega, phase },
                _ => unreachable!(),
            };
            let r = compute_bounds(&ModelParams { r2, ..p.clone() }, &BoundOptions::default()).unwrap();
            prop_assert!(r.r2M >= base.r2M && r.m0 >= base.m0);
        }

        #[test]
        fn coefficient_scaling(p in positive_params(), c in 0.1..10.0f64) {
            let base = compute_bounds(&p, &BoundOptions::default()).unwrap();
            let scaled = ModelParams {
                r1: p.r1.scaled(c),
                r2: p.r2.scaled(c),
                beta1: p.beta1.scaled(c),
                beta2: p.beta2.scaled(c),
                ..p.clone()
            };
            let r = compute_bounds(&scaled, &BoundOptions::default()).unwrap();
            let tol = 1e-9;
            let predicted_a1 = base.one_plus_w1k1 - c * p.k2 * base.r2M;
            let predicted_a2 = c * base.r1L - c * c * p.k2 / base.one_plus_w1k1 * base.beta1M * base.r2M;
            prop_assert!((r.A1.margin - predicted_a1).abs() < tol * (1.0 + predicted_a1.abs()));
            prop_assert!((r.A2.margin - predicted_a2).abs() < tol * (1.0 + predicted_a2.abs()));
            prop_assert_eq!(r.A1.holds, c * base.k2_r2M < base.one_plus_w1k1);
        }
    }
}
