use super::{check_dims, with_amplitudes, SpectralBounds, TimeEvolError};
use crate::circuit::StateVector;
use crate::numerics::{norm, SparseCOO, C64};

/// Relative widening of the spectral interval before rescaling.
const SCALE_MARGIN: f64 = 1e-8;
const BESSEL_TAIL_TOL: f64 = 1e-12;
const NORM_DRIFT_TOL: f64 = 1e-6;

/// J_0(x) … J_kmax(x) by Miller's backward recurrence, normalized with
/// J_0 + 2 Σ J_2k = 1.
pub fn bessel_j(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = kmax.max(ax.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut sum = 0.0;
    let mut scratch = vec![0.0; start + 1];
    scratch[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        scratch[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in scratch[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    for (k, v) in scratch.iter().enumerate() {
        if k == 0 {
            sum += v;
        } else if k % 2 == 0 {
            sum += 2.0 * v;
        }
    }
    for (k, o) in out.iter_mut().enumerate() {
        let v = scratch[k] / sum;
        *o = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

fn tail_below(a: f64, k: usize) -> bool {
    let js = bessel_j(a, k + 40);
    2.0 * js[k + 1..].iter().map(|v| v.abs()).sum::<f64>() < BESSEL_TAIL_TOL
}

/// Expansion order `k` and number of time sub-steps `M` for evolving to
/// `t_max`. With a = (e_max − e_min)·t_max/2: a ≤ 30 gives M = 1 and
/// k = ⌈1.2a + 20⌉, otherwise M = ⌈a/30⌉ and k follows from a/M. The order is
/// raised further until the Bessel tail is below 1e-12.
pub fn estimate_k(t_max: f64, bounds: SpectralBounds) -> Result<(usize, usize), TimeEvolError> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(TimeEvolError::InvalidArgument(format!("t_max = {t_max}")));
    }
    if bounds.width() == 0.0 {
        return Ok((1, 1));
    }
    let a = bounds.width() * t_max / 2.0;
    let m = if a <= 30.0 {
        1
    } else {
        (a / 30.0).ceil() as usize
    };
    let a_sub = a * (1.0 + SCALE_MARGIN) / m as f64;
    let mut k = (1.2 * a_sub + 20.0).ceil() as usize;
    while !tail_below(a_sub, k) {
        k += 1;
    }
    Ok((k, m))
}

/// e^{−iHt}ψ₀ by a k-term Chebyshev expansion applied over `m_steps` equal
/// sub-steps. Reports a bounds violation when any sub-step changes the norm
/// by more than 1e-6.
pub fn chebyshev_evol(
    h: &SparseCOO,
    psi0: &StateVector,
    t: f64,
    bounds: SpectralBounds,
    k: usize,
    m_steps: usize,
) -> Result<StateVector, TimeEvolError> {
    check_dims(h.dim(), psi0)?;
    if m_steps == 0 || k == 0 {
        return Err(TimeEvolError::InvalidArgument(format!(
            "k = {k}, M = {m_steps}"
        )));
    }
    let center = bounds.center();
    let tau = t / m_steps as f64;
    if bounds.width() == 0.0 {
        let phase = C64::from_polar(1.0, -center * t);
        return with_amplitudes(psi0, psi0.amplitudes().iter().map(|x| x * phase).collect());
    }
    let width = bounds.width() * (1.0 + SCALE_MARGIN);
    let a = width * tau / 2.0;
    let js = bessel_j(a, k);
    let neg_i = C64::new(0.0, -1.0);
    let coeffs: Vec<C64> = js
        .iter()
        .enumerate()
        .map(|(j, &jj)| neg_i.powu(j as u32) * if j == 0 { jj } else { 2.0 * jj })
        .collect();
    let phase = C64::from_polar(1.0, -center * tau);
    let dim = h.dim();
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    // ψ ↦ H̃ψ = (2Hψ − (e_max + e_min)ψ)/width
    let mut apply_scaled = |v: &[C64], out: &mut Vec<C64>| {
        h.matvec_into(v, &mut hv);
        for i in 0..dim {
            out[i] = (2.0 * hv[i] - 2.0 * center * v[i]) / width;
        }
    };
    let mut psi = psi0.amplitudes().to_vec();
    for _ in 0..m_steps {
        let n_in = norm(&psi);
        let mut t_prev = psi.clone();
        let mut t_cur = vec![C64::new(0.0, 0.0); dim];
        apply_scaled(&t_prev, &mut t_cur);
        let mut acc: Vec<C64> = t_prev.iter().map(|x| coeffs[0] * x).collect();
        if k >= 1 {
            acc.iter_mut()
                .zip(&t_cur)
                .for_each(|(a, x)| *a += coeffs[1] * x);
        }
        let mut scratch = vec![C64::new(0.0, 0.0); dim];
        for c in coeffs.iter().skip(2) {
            apply_scaled(&t_cur, &mut scratch);
            for i in 0..dim {
                scratch[i] = 2.0 * scratch[i] - t_prev[i];
                acc[i] += c * scratch[i];
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut scratch);
        }
        acc.iter_mut().for_each(|x| *x *= phase);
        let drift = (norm(&acc) - n_in).abs();
        if drift.is_nan() || drift > NORM_DRIFT_TOL * n_in.max(1e-300) {
            return Err(TimeEvolError::BoundsViolation { drift });
        }
        psi = acc;
    }
    with_amplitudes(psi0, psi)
}
