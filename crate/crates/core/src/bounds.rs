//! Right-hand sides of the twisted Linnik–Selberg bounds.
//!
//! `F ≲ G` is read as `|F| <= K (C m n s (1 + |alpha|))^eps G`; `K` and
//! `eps` are explicit inputs and every report carries them.

use serde::{Deserialize, Serialize};

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::sums::TwistQuery;

/// Exponent towards Ramanujan–Selberg, `0 <= theta < 1/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaParam(f64);

impl ThetaParam {
    /// Kim–Sarnak.
    pub const KIM_SARNAK: f64 = 7.0 / 64.0;

    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..0.25).contains(&theta) {
            return Err(Error::domain(format!("theta = {theta} outside [0, 1/4)")));
        }
        Ok(Self(theta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ThetaParam {
    fn default() -> Self {
        Self(Self::KIM_SARNAK)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub total: f64,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub terms: Vec<BoundTerm>,
}

impl BoundReport {
    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thm2Variant {
    /// Main term kept on the left.
    MainTerm,
    /// Main term bounded, `+ C^{2 theta}` outside the bracket.
    CTheta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicVariant {
    General,
    AlphaLt1,
}

/// Integer data shared by all evaluators, gcds taken exactly.
struct Params {
    c: f64,
    m: f64,
    n: f64,
    mn: f64,
    s: f64,
    alpha: f64,
    g_ms: f64,
    g_ns: f64,
    g_mns: f64,
    theta: f64,
}

impl Params {
    fn new(q: &TwistQuery, theta: ThetaParam) -> Self {
        let m = q.m.unsigned_abs();
        let n = q.n.unsigned_abs();
        let mn = m as u128 * n as u128;
        let g_mns = gcd((mn % q.s as u128) as u64, q.s);
        Self {
            c: q.c,
            m: m as f64,
            n: n as f64,
            mn: mn as f64,
            s: q.s as f64,
            alpha: q.alpha.abs(),
            g_ms: gcd(m, q.s) as f64,
            g_ns: gcd(n, q.s) as f64,
            g_mns: g_mns as f64,
            theta: theta.value(),
        }
    }

    /// `(m^{a}(m,s)^{a} + n^{a}(n,s)^{a}) / s^{b}`.
    fn mn_split(&self, a: f64, b: f64) -> f64 {
        ((self.m * self.g_ms).powf(a) + (self.n * self.g_ns).powf(a)) / self.s.powf(b)
    }

    fn c_sixth(&self) -> f64 {
        self.c.powf(1.0 / 6.0) / self.s.powf(1.0 / 3.0)
    }

    /// `min{(mn)^{1/8+theta/2}(mn,s)^{1/8}/s^{1/2}, (mn)^{1/4}(mn,s)^{1/4}/s}`.
    fn min_quarter(&self) -> f64 {
        let a = self.mn.powf(0.125 + 0.5 * self.theta) * self.g_mns.powf(0.125) / self.s.sqrt();
        a.min(self.min_second())
    }

    /// `min{(mn)^{1/16+3theta/4}(mn,s)^{1/16}/s^{1/4}, (mn)^{1/4}(mn,s)^{1/4}/s}`.
    fn min_sixteenth(&self) -> f64 {
        let a = self.mn.powf(0.0625 + 0.75 * self.theta) * self.g_mns.powf(0.0625)
            / self.s.powf(0.25);
        a.min(self.min_second())
    }

    fn min_second(&self) -> f64 {
        (self.mn * self.g_mns).powf(0.25) / self.s
    }

    /// `split_{1/8} * min{(mn)^{theta/2}, split_{1/8}}`.
    fn eighth_product(&self) -> f64 {
        let split = self.mn_split(0.125, 0.25);
        split * self.mn.powf(0.5 * self.theta).min(split)
    }

    fn alpha_prefactor(&self, eps: f64) -> f64 {
        (1.0 - self.alpha).powf(-0.5 - eps)
    }
}

fn report(q: &TwistQuery, eps: f64, k: f64, terms: Vec<(&str, f64)>) -> BoundReport {
    let base = q.c
        * q.m.unsigned_abs() as f64
        * q.n.unsigned_abs() as f64
        * q.s as f64
        * (1.0 + q.alpha.abs());
    let sum: f64 = terms.iter().map(|t| t.1).sum();
    BoundReport {
        total: k * base.powf(eps) * sum,
        epsilon: eps,
        k,
        terms: terms
            .into_iter()
            .map(|(label, value)| BoundTerm {
                label: label.to_string(),
                value,
            })
            .collect(),
    }
}

fn require_alpha_lt_1(q: &TwistQuery) -> Result<()> {
    if q.alpha.abs() >= 1.0 {
        return Err(Error::domain(format!("|alpha| = {} must be < 1", q.alpha.abs())));
    }
    Ok(())
}

pub fn thm1_rhs(q: &TwistQuery, theta: ThetaParam, eps: f64, k: f64) -> BoundReport {
    let p = Params::new(q, theta);
    report(
        q,
        eps,
        k,
        vec![
            ("C^(1/6)/s^(1/3)", p.c_sixth()),
            (
                "(1+|alpha|^(1/3))(mn)^(1/6)/s^(2/3)",
                (1.0 + p.alpha.cbrt()) * p.mn.powf(1.0 / 6.0) / p.s.powf(2.0 / 3.0),
            ),
            ("(m^(1/4)(m,s)^(1/4)+n^(1/4)(n,s)^(1/4))/s^(1/2)", p.mn_split(0.25, 0.5)),
            ("min_1/8", p.min_quarter()),
        ],
    )
}

/// The `thm1_rhs` terms plus `C^{2 theta}` for the bounded main term.
pub fn cor2_rhs(q: &TwistQuery, theta: ThetaParam, eps: f64, k: f64) -> BoundReport {
    let base = thm1_rhs(q, theta, eps, k);
    let mut terms: Vec<(&str, f64)> = base.terms.iter().map(|t| (t.label.as_str(), t.value)).collect();
    terms.insert(1, ("C^(2 theta)", q.c.powf(2.0 * theta.value())));
    report(q, eps, k, terms)
}

/// The `|alpha| < 1` improvement. Bracketed terms carry the
/// `(1 - |alpha|)^{-1/2-eps}` prefactor.
pub fn thm2_rhs(
    q: &TwistQuery,
    theta: ThetaParam,
    eps: f64,
    k: f64,
    variant: Thm2Variant,
) -> Result<BoundReport> {
    require_alpha_lt_1(q)?;
    let p = Params::new(q, theta);
    let pre = p.alpha_prefactor(eps);
    let mut terms = vec![
        ("C^(1/6)/s^(1/3)", pre * p.c_sixth()),
        ("split_1/8 * min", pre * p.eighth_product()),
        ("(mn)^(1/6)/s^(2/3)", pre * p.mn.powf(1.0 / 6.0) / p.s.powf(2.0 / 3.0)),
        ("min_1/16", pre * p.min_sixteenth()),
    ];
    if variant == Thm2Variant::CTheta {
        terms.push(("C^(2 theta)", p.c.powf(2.0 * p.theta)));
    }
    Ok(report(q, eps, k, terms))
}

/// Bounds for the block `C <= c < 2C`.
pub fn dyadic_rhs(
    q: &TwistQuery,
    theta: ThetaParam,
    eps: f64,
    k: f64,
    variant: DyadicVariant,
) -> Result<BoundReport> {
    let p = Params::new(q, theta);
    let terms = match variant {
        DyadicVariant::General => vec![
            ("C^(1/6)/s^(1/3)", p.c_sixth()),
            ("(1+|alpha|)(mn)^(1/2)/C", (1.0 + p.alpha) * p.mn.sqrt() / p.c),
            ("(m^(1/4)(m,s)^(1/4)+n^(1/4)(n,s)^(1/4))/s^(1/2)", p.mn_split(0.25, 0.5)),
            ("min_1/8", p.min_quarter()),
        ],
        DyadicVariant::AlphaLt1 => {
            require_alpha_lt_1(q)?;
            let pre = p.alpha_prefactor(eps);
            vec![
                ("C^(1/6)/s^(1/3)", pre * p.c_sixth()),
                ("split_1/8 * min", pre * p.eighth_product()),
                ("(mn)^(1/2)/C", pre * p.mn.sqrt() / p.c),
                ("min_1/16", pre * p.min_sixteenth()),
            ]
        }
    };
    Ok(report(q, eps, k, terms))
}

/// `K C^{1/6} log(2C)^{1/3}`.
pub fn kuznetsov_classic_rhs(c: f64, k: f64) -> f64 {
    k * c.powf(1.0 / 6.0) * (2.0 * c).ln().cbrt()
}

/// `K s^{-1+eps} C^{1/2+eps}`.
pub fn weil_partial_rhs(s: u64, c: f64, eps: f64, k: f64) -> f64 {
    k * (s as f64).powf(-1.0 + eps) * c.powf(0.5 + eps)
}
