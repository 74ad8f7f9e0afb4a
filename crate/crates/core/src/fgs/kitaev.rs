use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fgs_ground_state, two_time_correlation, FgsError, FgsState, QuadraticHamiltonian};
use crate::numerics::{ComplexMatrix, C64};

/// Open Kitaev chain −t Σ (c_i†c_{i+1} + h.c.) + Δ Σ (c_i†c_{i+1}† + h.c.) − μ Σ n_i,
/// i.e. A_{i,i±1} = −t, A_ii = −μ, B_{i,i+1} = Δ = −B_{i+1,i}.
pub fn build_kitaev(
    l: usize,
    t: f64,
    delta: f64,
    mu: f64,
) -> Result<QuadraticHamiltonian, FgsError> {
    if l < 2 {
        return Err(FgsError::InvalidArgument(format!(
            "Kitaev chain needs L ≥ 2, got {l}"
        )));
    }
    let mut a = ComplexMatrix::zeros(l, l);
    let mut b = ComplexMatrix::zeros(l, l);
    for i in 0..l {
        a[(i, i)] = C64::new(-mu, 0.0);
        if i + 1 < l {
            a[(i, i + 1)] = C64::new(-t, 0.0);
            a[(i + 1, i)] = C64::new(-t, 0.0);
            b[(i, i + 1)] = C64::new(delta, 0.0);
            b[(i + 1, i)] = C64::new(-delta, 0.0);
        }
    }
    QuadraticHamiltonian::new(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitaevScan {
    /// (μ, half-chain entropy in bits).
    pub points: Vec<(f64, f64)>,
    pub argmax_mu: f64,
}

/// Half-chain ground-state entropy of the Kitaev chain over `mu_grid`;
/// grid points run in parallel.
pub fn kitaev_entropy_scan(
    l: usize,
    t: f64,
    delta: f64,
    mu_grid: &[f64],
) -> Result<KitaevScan, FgsError> {
    if mu_grid.is_empty() {
        return Err(FgsError::InvalidArgument("empty μ grid".into()));
    }
    let half: Vec<usize> = (0..l / 2).collect();
    let points: Vec<(f64, f64)> = mu_grid
        .par_iter()
        .map(|&mu| {
            let gs = fgs_ground_state(&build_kitaev(l, t, delta, mu)?)?;
            Ok((mu, gs.state.entropy(&half)?))
        })
        .collect::<Result<_, FgsError>>()?;
    let argmax_mu = points
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(m, s)| {
            if s > acc.1 {
                (m, s)
            } else {
                acc
            }
        })
        .0;
    Ok(KitaevScan { points, argmax_mu })
}

/// Rows (t, site, |⟨c_site†(t) c_source(0)⟩|²) for every requested time.
pub fn quench_lightcone(
    s0: &FgsState,
    h: &QuadraticHamiltonian,
    times: &[f64],
    source: usize,
) -> Result<Vec<(f64, usize, f64)>, FgsError> {
    if source >= s0.l() {
        return Err(FgsError::SiteOutOfRange {
            site: source,
            l: s0.l(),
        });
    }
    let mut rows = Vec::with_capacity(times.len() * s0.l());
    for &t in times {
        let c = two_time_correlation(s0, h, t)?;
        rows.extend((0..s0.l()).map(|i| (t, i, c[(i, source)].norm_sqr())));
    }
    Ok(rows)
}

pub fn scan_csv(scan: &KitaevScan) -> String {
    let mut out = String::from("mu,entropy_bits\n");
    for (mu, s) in &scan.points {
        out.push_str(&format!("{mu},{s}\n"));
    }
    out
}

pub fn lightcone_csv(rows: &[(f64, usize, f64)]) -> String {
    let mut out = String::from("t,site,abs_corr_sq\n");
    for (t, i, v) in rows {
        out.push_str(&format!("{t},{i},{v}\n"));
    }
    out
}
