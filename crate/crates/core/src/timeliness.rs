//! Nonlinear age penalties and the unified quadratic objective.
//!
//! Three penalty shapes are supported: exponential `exp(rho * age)`,
//! logarithmic `ln(rho * age)`, and polynomial `rho * age^kappa`. Each
//! case reduces, after folding in the weighted quadratic coding cost
//! `w * (alpha * l + beta * l^2)`, to one quadratic form
//! `A E[L^2] + B (E[L])^2 + C E[L] + D` solved by a single optimizer path.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyCase {
    /// Exponentially decreasing timeliness.
    Edt,
    /// Logarithmically decreasing timeliness.
    Ldt,
    /// Polynomially decreasing timeliness.
    Pdt,
}

impl PenaltyCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PenaltyCase::Edt => "edt",
            PenaltyCase::Ldt => "ldt",
            PenaltyCase::Pdt => "pdt",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "edt" => Ok(PenaltyCase::Edt),
            "ldt" => Ok(PenaltyCase::Ldt),
            "pdt" => Ok(PenaltyCase::Pdt),
            other => Err(Error::invalid("case", format!("unknown penalty case `{other}`"))),
        }
    }
}

/// Penalty shape plus coding-cost weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub case: PenaltyCase,
    pub rho: f64,
    /// Polynomial exponent; the analytic path supports kappa = 1 only.
    pub kappa: u32,
    pub w: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PenaltyConfig {
    pub fn new(case: PenaltyCase, rho: f64, kappa: u32, w: f64, alpha: f64, beta: f64) -> Result<Self> {
        let cfg = PenaltyConfig { case, rho, kappa, w, alpha, beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("w", self.w), ("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() {
                return Err(Error::invalid("penalty", format!("{name} = {v} is not finite")));
            }
        }
        if self.rho < 0.0 {
            return Err(Error::invalid("rho", "must be >= 0"));
        }
        if self.case == PenaltyCase::Ldt && self.rho == 0.0 {
            return Err(Error::invalid("rho", "must be > 0 for the LDT case"));
        }
        if self.w <= 0.0 {
            return Err(Error::invalid("w", "must be > 0"));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::invalid("alpha/beta", "cost coefficients must be >= 0"));
        }
        if self.kappa == 0 {
            return Err(Error::invalid("kappa", "must be >= 1"));
        }
        Ok(())
    }

    /// Instantaneous penalty g(delta).
    pub fn penalty_value(&self, delta: f64) -> Result<f64> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::invalid("delta", format!("age {delta} must be finite and >= 0")));
        }
        match self.case {
            PenaltyCase::Edt => Ok((self.rho * delta).exp()),
            PenaltyCase::Ldt => {
                if delta <= 0.0 {
                    return Err(Error::Domain("ln(rho * delta) undefined at delta <= 0".into()));
                }
                Ok((self.rho * delta).ln())
            }
            PenaltyCase::Pdt => Ok(self.rho * delta.powi(self.kappa as i32)),
        }
    }

    /// Exact integral of g(age_start + t) for t in [0, duration] over one
    /// linear age segment. Removable singularities (EDT at rho = 0, LDT at
    /// age 0) use their analytic limits.
    pub fn penalty_segment_integral(&self, age_start: f64, duration: f64) -> Result<f64> {
        if !age_start.is_finite() || !duration.is_finite() || age_start < 0.0 || duration <= 0.0 {
            return Err(Error::invalid(
                "segment",
                format!("age_start={age_start}, duration={duration}"),
            ));
        }
        let a = age_start;
        let d = duration;
        let rho = self.rho;
        match self.case {
            PenaltyCase::Edt => {
                if rho == 0.0 {
                    Ok(d)
                } else {
                    Ok(((rho * (a + d)).exp() - (rho * a).exp()) / rho)
                }
            }
            PenaltyCase::Ldt => {
                // antiderivative x (ln(rho x) - 1), limit 0 at x = 0
                let f = |x: f64| if x == 0.0 { 0.0 } else { x * ((rho * x).ln() - 1.0) };
                Ok(f(a + d) - f(a))
            }
            PenaltyCase::Pdt => {
                let k1 = self.kappa as f64 + 1.0;
                Ok(rho * ((a + d).powf(k1) - a.powf(k1)) / k1)
            }
        }
    }

    /// Analytic per-cycle expected penalty E[Q] at codeword moments
    /// (EL, EL2) and admitted inter-arrival mean gamma. Second-order
    /// Taylor approximation for EDT/LDT; exact for PDT with kappa = 1.
    pub fn expected_q(&self, el: f64, el2: f64, gamma: f64) -> Result<f64> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::invalid("gamma", format!("{gamma} must be finite and > 0")));
        }
        let rho = self.rho;
        match self.case {
            PenaltyCase::Edt => Ok(rho / 2.0 * el2
                + rho * el * el
                + (1.0 + 2.0 * rho * gamma) * el
                + rho * gamma * gamma
                + gamma),
            PenaltyCase::Ldt => Ok(rho * el2
                + 2.0 * rho * el * el
                + 2.0 * (2.0 * rho * gamma - 1.0) * el
                + 2.0 * rho * gamma * gamma
                - 2.0 * gamma),
            PenaltyCase::Pdt => {
                if self.kappa != 1 {
                    return Err(Error::UnsupportedCase(format!(
                        "analytic PDT supports kappa=1, got kappa={}",
                        self.kappa
                    )));
                }
                Ok(rho / 2.0 * el2 + rho * el * el + 2.0 * rho * gamma * el + rho * gamma * gamma)
            }
        }
    }

    /// Groups the case's objective, with the coding cost folded in, as
    /// `A E[L^2] + B (E[L])^2 + C E[L] + D`.
    pub fn quadratic_form(&self, gamma: f64) -> Result<QuadraticForm> {
        self.validate()?;
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(Error::invalid("gamma", format!("{gamma} must be finite and > 0")));
        }
        let rho = self.rho;
        let (a, b, c, d) = match self.case {
            PenaltyCase::Edt => (
                rho / 2.0 + self.w * self.beta,
                rho,
                1.0 + 2.0 * rho * gamma + self.w * self.alpha,
                rho * gamma * gamma + gamma,
            ),
            PenaltyCase::Ldt => (
                rho + self.w * self.beta,
                2.0 * rho,
                4.0 * rho * gamma - 2.0 + self.w * self.alpha,
                2.0 * rho * gamma * gamma - 2.0 * gamma,
            ),
            PenaltyCase::Pdt => {
                if self.kappa != 1 {
                    return Err(Error::UnsupportedCase(format!(
                        "analytic PDT supports kappa=1, got kappa={}",
                        self.kappa
                    )));
                }
                (
                    rho / 2.0 + self.w * self.beta,
                    rho,
                    2.0 * rho * gamma + self.w * self.alpha,
                    rho * gamma * gamma,
                )
            }
        };
        if a <= 0.0 {
            return Err(Error::DegenerateObjective { a });
        }
        Ok(QuadraticForm {
            a,
            b,
            c,
            d,
            gamma,
            w_alpha: self.w * self.alpha,
            w_beta: self.w * self.beta,
        })
    }
}

/// Grouped objective coefficients; `w_alpha`/`w_beta` record the coding-cost
/// share so solutions can split the objective back into E[Q] + cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
    pub w_alpha: f64,
    pub w_beta: f64,
}
