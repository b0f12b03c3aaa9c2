//! Theorem constants for a model family without running a simulation.

use std::fmt::Write as _;

use anyhow::{bail, Context};
use funcrate_core::model::{certificate_for, q_moment};
use funcrate_core::theory::{c_gamma_alpha_detail, theoretical_bound};
use funcrate_core::{ProcessModelF64, TheoryBoundF64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Brownian,
    Stable,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brownian" => Ok(Family::Brownian),
            "stable" => Ok(Family::Stable),
            other => Err(format!("unknown model '{other}' (expected brownian or stable)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstantsRequest {
    pub gamma: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub family: Family,
    /// `σ` for Brownian motion, the scale for stable processes.
    pub scale: f64,
    pub holder_norm: f64,
    pub n: Vec<usize>,
}

/// Human-readable listing of `C_T`, `q_moment`, `D`, `C` and the bound at each requested `n`.
pub fn constants_report(req: &ConstantsRequest) -> anyhow::Result<String> {
    let model = match req.family {
        Family::Brownian => {
            if req.alpha != 2.0 {
                bail!("brownian models have alpha = 2, got --alpha {}", req.alpha);
            }
            ProcessModelF64::brownian(req.scale, vec![0.0])?
        }
        Family::Stable => ProcessModelF64::stable(req.alpha, req.scale, 0.0)?,
    };
    let cert = certificate_for(&model, req.horizon)?;
    let cert = cert.certificate().context("model is not certified")?;
    let q = q_moment(cert, req.gamma)?;
    let tb = TheoryBoundF64::new(cert, req.gamma, req.holder_norm)?;

    let mut out = String::new();
    writeln!(out, "model        {model}")?;
    writeln!(out, "kernel Q     {}", cert.q_kernel())?;
    writeln!(out, "C_T          {}", cert.c_t())?;
    writeln!(out, "q_moment     {q}")?;
    writeln!(out, "D            {}", tb.d_constant)?;
    match tb.c_constant {
        Some(c) => {
            let detail = c_gamma_alpha_detail(req.gamma, req.alpha)?;
            writeln!(out, "C            {c}")?;
            writeln!(out, "  first term {}", detail.first_term)?;
            writeln!(out, "  scan max   {} at n = {}", detail.scan_max, detail.argmax)?;
            writeln!(out, "exponent     {}", tb.exponent())?;
        }
        None => {
            writeln!(out, "C            n/a (gamma = alpha/2, bound D |h|^2 n^-2 ln n)")?;
        }
    }
    for &n in &req.n {
        writeln!(out, "bound(n={n}) {}", theoretical_bound(&tb, n))?;
    }
    Ok(out)
}
