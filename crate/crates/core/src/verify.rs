//! Numerical audits of the analytic modes.
//!
//! Residuals of the lab-frame Schrodinger equation by central differences,
//! Dirichlet boundary magnitudes on the moving walls, Gram matrices, fitted
//! convergence orders, and the audit that decides which sign convention for
//! the co-moving coordinate yields exact solutions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::WellGeometry;
use crate::modes::{gauge_phase, mode_energy, ModeFrame, MovingMode};
use crate::quadrature::AdaptiveQuadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub dx: f64,
    pub dt: f64,
    pub max_residual: f64,
    /// Root mean square over the probes.
    pub l2_residual: f64,
    /// `E_1 * max |psi|` over the probes.
    pub reference_scale: f64,
    pub relative_max: f64,
}

/// Residual `i hbar d_t psi + (hbar^2 / 2m) d_xx psi` of `field` at each probe,
/// using second-order central differences in `t` and `x`.
///
/// Probes must keep `2 dx` from both walls at their own time, stay inside the
/// well at `t +- dt`, and the width must remain positive at `t +- 2 dt`.
pub fn residual_lab<F>(
    g: &WellGeometry,
    field: F,
    probes: &[(f64, f64)],
    dx: f64,
    dt: f64,
) -> Result<ResidualReport>
where
    F: Fn(f64, f64) -> Result<Complex64> + Sync,
{
    if !(dx > 0.0 && dt > 0.0) {
        return Err(invalid("stencil spacings must be positive"));
    }
    if probes.is_empty() {
        return Err(invalid("at least one probe is required"));
    }
    for &(x, t) in probes {
        check_probe(g, x, t, dx, dt)?;
    }
    let hbar = g.hbar();
    let kinetic = hbar * hbar / (2.0 * g.mass());
    let per_probe: Vec<(f64, f64)> = probes
        .par_iter()
        .map(|&(x, t)| {
            let centre = field(x, t)?;
            let d_t = (field(x, t + dt)? - field(x, t - dt)?) / (2.0 * dt);
            let d_xx = (field(x + dx, t)? - centre * 2.0 + field(x - dx, t)?) / (dx * dx);
            let r = Complex64::new(0.0, hbar) * d_t + d_xx * kinetic;
            Ok((r.norm(), centre.norm()))
        })
        .collect::<Result<_>>()?;
    let max_residual = per_probe.iter().map(|p| p.0).fold(0.0, f64::max);
    let mean_sq = per_probe.iter().map(|p| p.0 * p.0).sum::<f64>() / per_probe.len() as f64;
    let reference_scale = mode_energy(g, 1)? * per_probe.iter().map(|p| p.1).fold(0.0, f64::max);
    if reference_scale == 0.0 {
        return Err(invalid("field vanishes at every probe; residual scale undefined"));
    }
    Ok(ResidualReport {
        dx,
        dt,
        max_residual,
        l2_residual: mean_sq.sqrt(),
        reference_scale,
        relative_max: max_residual / reference_scale,
    })
}

fn check_probe(g: &WellGeometry, x: f64, t: f64, dx: f64, dt: f64) -> Result<()> {
    let bad = |reason: String| Error::InvalidProbe { x, t, reason };
    if !(x.is_finite() && t.is_finite()) {
        return Err(bad("non-finite coordinate".into()));
    }
    for s in [t - 2.0 * dt, t + 2.0 * dt] {
        if g.check_time(s).is_err() {
            return Err(bad(format!("stencil time {s} reaches the validity horizon")));
        }
    }
    let (l, r) = g.wall_positions(t)?;
    if x - l < 2.0 * dx || r - x < 2.0 * dx {
        return Err(bad(format!("closer than 2 dx to a wall of [{l}, {r}]")));
    }
    for s in [t - dt, t + dt] {
        let (l, r) = g.wall_positions(s)?;
        if x <= l || x >= r {
            return Err(bad(format!("outside the well at stencil time {s}")));
        }
    }
    Ok(())
}

/// Last time at which audits sample the geometry: `t_max`, or a quarter of
/// the horizon for a contracting well. Mode frequencies grow like `1 / L^2`
/// as the well collapses, and fixed-spacing stencils stop resolving them.
pub fn audit_time_limit(g: &WellGeometry, t_max: f64) -> f64 {
    match g.validity_horizon() {
        Some(h) => t_max.min(0.25 * h),
        None => t_max,
    }
}

/// Uniform random probes satisfying the [`residual_lab`] margins, with times
/// in `[2 dt, t_max]`.
pub fn random_probes<R: Rng>(
    g: &WellGeometry,
    count: usize,
    t_max: f64,
    dx: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let t_hi = audit_time_limit(g, t_max);
    let t_lo = 2.0 * dt;
    if !(t_hi > t_lo) {
        return Err(invalid(format!("no room for probes in [{t_lo}, {t_hi}]")));
    }
    let drift = g.u_left().abs().max(g.u_right().abs()) * dt;
    let margin = 2.0 * dx + drift;
    let mut probes = Vec::with_capacity(count);
    while probes.len() < count {
        let t = rng.random_range(t_lo..t_hi);
        let (l, r) = g.wall_positions(t)?;
        if r - l <= 2.0 * margin {
            continue;
        }
        let x = rng.random_range(l + margin..r - margin);
        probes.push((x, t));
    }
    Ok(probes)
}

/// Largest ratio, over `times`, of the field magnitude on either wall to the
/// field's maximum over the interior.
pub fn boundary_check<F>(g: &WellGeometry, field: F, times: &[f64]) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<Complex64> + Sync,
{
    const INTERIOR_SAMPLES: usize = 257;
    if times.is_empty() {
        return Err(invalid("at least one time is required"));
    }
    let ratios: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let (l, r) = g.wall_positions(t)?;
            let edge = field(l, t)?.norm().max(field(r, t)?.norm());
            let mut interior: f64 = 0.0;
            for i in 1..=INTERIOR_SAMPLES {
                let x = l + (r - l) * i as f64 / (INTERIOR_SAMPLES + 1) as f64;
                interior = interior.max(field(x, t)?.norm());
            }
            if interior == 0.0 {
                return Err(invalid(format!("field vanishes inside the well at t = {t}")));
            }
            Ok(edge / interior)
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Largest entry of `|Gram - I|` for modes `1..=n_max` at time `t`, with inner
/// products by adaptive quadrature over the instantaneous well.
pub fn orthonormality_check(g: &WellGeometry, n_max: u32, t: f64, quad_tol: f64) -> Result<f64> {
    if n_max == 0 {
        return Err(invalid("n_max must be at least 1"));
    }
    let (l, r) = g.wall_positions(t)?;
    let frame = ModeFrame::new(g, t)?;
    let q = AdaptiveQuadrature::new(quad_tol)?;
    let modes: Vec<MovingMode> = (1..=n_max).map(|n| MovingMode::new(*g, n)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..modes.len())
        .flat_map(|i| (i..modes.len()).map(move |j| (i, j)))
        .collect();
    let deviations: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (mi, mj) = (&modes[i], &modes[j]);
            let ip = q
                .integrate(|x: f64| frame.eval(mi, x).conj() * frame.eval(mj, x), l, r)?
                .value;
            let target = if i == j { 1.0 } else { 0.0 };
            Ok((ip - target).norm())
        })
        .collect::<Result<_>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_order: f64,
}

/// Least-squares slope of `log(error)` against `log(spacing)`.
pub fn convergence_order(spacings: &[f64], errors: &[f64]) -> Result<ConvergenceEstimate> {
    if spacings.len() != errors.len() {
        return Err(invalid("spacings and errors differ in length"));
    }
    if spacings.len() < 3 {
        return Err(invalid(format!(
            "need at least 3 spacings to fit an order, got {}",
            spacings.len()
        )));
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("spacings must be strictly decreasing"));
    }
    if spacings.iter().chain(errors).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("spacings and errors must be positive and finite"));
    }
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ConvergenceEstimate {
        spacings: spacings.to_vec(),
        errors: errors.to_vec(),
        fitted_order: sxy / sxx,
    })
}

/// Order fitted to `relative_max` of residual reports, ordered by `dx`.
pub fn convergence_from_reports(reports: &[ResidualReport]) -> Result<ConvergenceEstimate> {
    let spacings: Vec<f64> = reports.iter().map(|r| r.dx).collect();
    let errors: Vec<f64> = reports.iter().map(|r| r.relative_max).collect();
    convergence_order(&spacings, &errors)
}

/// Residual reports for `field` at each spacing (`dx = dt = h`), reusing the
/// same probe set.
pub fn residual_sweep<F>(
    g: &WellGeometry,
    field: F,
    probes: &[(f64, f64)],
    spacings: &[f64],
) -> Result<Vec<ResidualReport>>
where
    F: Fn(f64, f64) -> Result<Complex64> + Sync,
{
    spacings
        .iter()
        .map(|&h| residual_lab(g, &field, probes, h, h))
        .collect()
}

/// Candidate assemblies of the moving-wall mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Sine of `(x - u_left t) / L`, boosted with the left-wall velocity.
    CoMoving,
    /// Sine of `(x + u_left t) / L`, as if the left wall moved at
    /// `-u_left`, keeping the co-moving gauge phase.
    MirroredWall,
    /// Both candidates pass; happens exactly when they coincide (`u_left = 0`).
    Tie,
}

/// The mirrored-wall candidate: identical to the co-moving mode except that
/// the standing wave uses `(x + u_left t)` in place of `(x - u_left t)`.
/// Zero outside the well.
pub fn mirrored_wall_mode(mode: MovingMode) -> impl Fn(f64, f64) -> Result<Complex64> + Sync {
    move |x, t| {
        let g = mode.geometry();
        let frame = ModeFrame::new(g, t)?;
        if !frame.contains(x) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let arg = mode.k() * (x + g.u_left() * t) / (frame.width / g.a());
        let amplitude = (2.0 / frame.width).sqrt() * arg.sin();
        let phase = frame.gauge.phase(x - frame.x_left) - mode.energy() * frame.tau / g.hbar();
        Ok(Complex64::from_polar(amplitude, phase))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub probe_count: usize,
    pub boundary_times: usize,
    pub t_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub residual_threshold: f64,
    pub boundary_threshold: f64,
    pub seed: u64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            probe_count: 200,
            boundary_times: 50,
            t_max: 5.0,
            dx: 1e-3,
            dt: 1e-3,
            residual_threshold: 1e-4,
            boundary_threshold: 1e-12,
            seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub convention: Convention,
    pub residual: ResidualReport,
    pub boundary: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAudit {
    pub passing_convention: Convention,
    /// True when the two candidates are the same function (`u_left = 0`).
    pub degenerate: bool,
    pub candidates: Vec<CandidateReport>,
}

/// Runs both candidate conventions for mode `n` through [`residual_lab`] and
/// [`boundary_check`] and reports which one is an exact solution.
pub fn sign_convention_audit(g: &WellGeometry, n: u32, settings: &AuditSettings) -> Result<SignAudit> {
    let mode = MovingMode::new(*g, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let probes = random_probes(g, settings.probe_count, settings.t_max, settings.dx, settings.dt, &mut rng)?;
    let times = random_times(g, settings.boundary_times, settings.t_max, &mut rng);

    let co_moving = |x: f64, t: f64| mode.eval(x, t);
    let literal = mirrored_wall_mode(mode);
    let judge = |convention, residual: ResidualReport, boundary: f64| CandidateReport {
        convention,
        passes: residual.relative_max <= settings.residual_threshold
            && boundary <= settings.boundary_threshold,
        residual,
        boundary,
    };
    let candidates = vec![
        judge(
            Convention::CoMoving,
            residual_lab(g, co_moving, &probes, settings.dx, settings.dt)?,
            boundary_check(g, co_moving, &times)?,
        ),
        judge(
            Convention::MirroredWall,
            residual_lab(g, &literal, &probes, settings.dx, settings.dt)?,
            boundary_check(g, &literal, &times)?,
        ),
    ];
    let passing_convention = match (candidates[0].passes, candidates[1].passes) {
        (true, true) => Convention::Tie,
        (true, false) => Convention::CoMoving,
        (false, true) => Convention::MirroredWall,
        (false, false) => {
            return Err(Error::AuditFailed(format!(
                "neither convention passes for n = {n}: co-moving residual {:e} boundary {:e}, \
                 mirrored-wall residual {:e} boundary {:e}",
                candidates[0].residual.relative_max,
                candidates[0].boundary,
                candidates[1].residual.relative_max,
                candidates[1].boundary
            )))
        }
    };
    Ok(SignAudit {
        passing_convention,
        degenerate: g.u_left() == 0.0,
        candidates,
    })
}

/// `count` uniform times in `[0, t_max]`, clipped before a contracting
/// well's horizon.
pub fn random_times<R: Rng>(g: &WellGeometry, count: usize, t_max: f64, rng: &mut R) -> Vec<f64> {
    let hi = audit_time_limit(g, t_max);
    (0..count).map(|_| rng.random_range(0.0..=hi)).collect()
}

/// Deviations of the implemented gauge phase from the two identities that
/// pin it down, measured by finite differences in the co-moving coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseIdentityReport {
    /// Max of `|(hbar / (m L)) d(phi_bar)/d(x_bar) + u_left + x_bar L_dot|`.
    pub gauge_condition: f64,
    /// Max of `|d^2(phi_bar)/d(x_bar)^2 + (m / hbar) L_dot L|`.
    pub curvature: f64,
}

/// `phi_bar(x_bar, t)`: the gauge phase, with the sign used in
/// `psi = exp(-i phi) psi'`, as a function of the co-moving coordinate. It is
/// evaluated through the lab coordinate so the check exercises the same path
/// as the modes.
pub fn comoving_phase(g: &WellGeometry, x_bar: f64, t: f64) -> Result<f64> {
    let x = g.from_comoving(x_bar, t)?;
    Ok(-gauge_phase(g, t)?.phase(x - g.u_left() * t))
}

/// Checks the gauge identities at each `(x_bar, t)` sample. `step` is the
/// finite-difference spacing in `x_bar`; the phase is quadratic so the
/// stencils carry no truncation error and a wide step keeps rounding small.
pub fn phase_identity_check(
    g: &WellGeometry,
    samples: &[(f64, f64)],
    step: f64,
) -> Result<PhaseIdentityReport> {
    if !(step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let (hbar, m) = (g.hbar(), g.mass());
    let mut report = PhaseIdentityReport {
        gauge_condition: 0.0,
        curvature: 0.0,
    };
    for &(xb, t) in samples {
        let l = g.scale_factor(t)?;
        let plus = comoving_phase(g, xb + step, t)?;
        let centre = comoving_phase(g, xb, t)?;
        let minus = comoving_phase(g, xb - step, t)?;
        let first = (plus - minus) / (2.0 * step);
        let second = (plus - 2.0 * centre + minus) / (step * step);
        let cond = hbar / (m * l) * first + g.u_left() + xb * g.l_dot();
        let curv = second + m / hbar * g.l_dot() * l;
        report.gauge_condition = report.gauge_condition.max(cond.abs());
        report.curvature = report.curvature.max(curv.abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PhysicalConstants;
    use crate::spectral::SpectralState;

    fn geometry(u_left: f64, u_right: f64) -> WellGeometry {
        WellGeometry::new(1.0, u_left, u_right, PhysicalConstants::natural()).unwrap()
    }

    fn probes(g: &WellGeometry, count: usize, h: f64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        random_probes(g, count, 5.0, h, h, &mut rng).unwrap()
    }

    #[test]
    fn static_mode_residual_is_truncation_only() {
        let g = geometry(0.0, 0.0);
        let m = MovingMode::new(g, 1).unwrap();
        let rep = residual_lab(&g, |x, t| m.eval(x, t), &probes(&g, 100, 1e-3), 1e-3, 1e-3).unwrap();
        assert!(rep.relative_max <= 1e-5, "{rep:?}");
    }

    #[test]
    fn moving_mode_residual_is_second_order() {
        let g = geometry(-0.1, 0.2);
        let m = MovingMode::new(g, 1).unwrap();
        let p = probes(&g, 100, 4e-3);
        let reports = residual_sweep(&g, |x, t| m.eval(x, t), &p, &[4e-3, 2e-3, 1e-3]).unwrap();
        assert!(reports[2].relative_max <= 1e-4);
        let ratio = reports[1].relative_max / reports[2].relative_max;
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn corrupted_mode_fails_residual() {
        let g = geometry(-0.1, 0.2);
        let m = MovingMode::new(g, 1).unwrap();
        let bad = mirrored_wall_mode(m);
        let rep = residual_lab(&g, &bad, &probes(&g, 100, 1e-3), 1e-3, 1e-3).unwrap();
        assert!(rep.relative_max >= 1e-1, "{rep:?}");
    }

    #[test]
    fn probes_too_close_are_rejected() {
        let g = geometry(-0.1, 0.2);
        let m = MovingMode::new(g, 1).unwrap();
        let f = |x, t| m.eval(x, t);
        assert!(matches!(
            residual_lab(&g, f, &[(-0.0995, 1.0)], 1e-3, 1e-3),
            Err(Error::InvalidProbe { .. })
        ));
        let shrinking = geometry(0.0, -0.5);
        let m = MovingMode::new(shrinking, 1).unwrap();
        assert!(residual_lab(&shrinking, |x, t| m.eval(x, t), &[(0.0005, 1.999)], 1e-5, 1e-3).is_err());
    }

    #[test]
    fn boundary_magnitudes() {
        let g = geometry(-0.1, 0.2);
        let times: Vec<f64> = (0..20).map(|i| 0.25 * i as f64).collect();
        let m = MovingMode::new(g, 2).unwrap();
        assert!(boundary_check(&g, |x, t| m.eval(x, t), &times).unwrap() <= 1e-13);

        let s = SpectralState::new(
            g,
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.6), Complex64::new(0.2, 0.2)],
        )
        .unwrap();
        assert!(boundary_check(&g, |x, t| s.eval(x, t), &times).unwrap() <= 1e-12);

        let bad = mirrored_wall_mode(m);
        assert!(boundary_check(&g, &bad, &times).unwrap() >= 1e-2);
    }

    #[test]
    fn gram_matrix_close_to_identity() {
        let fixed = geometry(0.0, 0.0);
        assert!(orthonormality_check(&fixed, 8, 0.4, 1e-13).unwrap() <= 1e-10);
        let g = geometry(-0.1, 0.2);
        assert!(orthonormality_check(&g, 8, 1.0, 1e-13).unwrap() <= 1e-10);
        assert!(orthonormality_check(&g, 1, 2.0, 1e-13).unwrap() <= 1e-10);
        assert!(orthonormality_check(&g, 0, 2.0, 1e-13).is_err());
    }

    #[test]
    fn synthetic_orders() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let quad: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        let lin: Vec<f64> = hs.iter().map(|h| 0.5 * h).collect();
        assert!((convergence_order(&hs, &quad).unwrap().fitted_order - 2.0).abs() < 1e-6);
        assert!((convergence_order(&hs, &lin).unwrap().fitted_order - 1.0).abs() < 1e-6);
        assert!(convergence_order(&hs[..2], &quad[..2]).is_err());
        assert!(convergence_order(&[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn audit_static_well_is_degenerate_tie() {
        let audit = sign_convention_audit(&geometry(0.0, 0.0), 1, &AuditSettings::default()).unwrap();
        assert_eq!(audit.passing_convention, Convention::Tie);
        assert!(audit.degenerate);
    }

    #[test]
    fn audit_picks_co_moving_for_moving_walls() {
        for (ul, ur) in [(-0.1, 0.2), (0.3, 0.3), (-0.25, -0.25), (0.2, -0.1)] {
            let audit = sign_convention_audit(&geometry(ul, ur), 1, &AuditSettings::default()).unwrap();
            assert_eq!(audit.passing_convention, Convention::CoMoving, "({ul}, {ur})");
            assert!(!audit.degenerate);
        }
    }

    #[test]
    fn audit_fails_when_thresholds_are_unreachable() {
        let settings = AuditSettings {
            residual_threshold: 1e-16,
            ..AuditSettings::default()
        };
        assert!(matches!(
            sign_convention_audit(&geometry(-0.1, 0.2), 1, &settings),
            Err(Error::AuditFailed(_))
        ));
    }

    #[test]
    fn phase_identities_hold() {
        let g = geometry(-0.1, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..5.0)))
            .collect();
        let rep = phase_identity_check(&g, &samples, 0.125).unwrap();
        assert!(rep.gauge_condition <= 1e-12, "{rep:?}");
        assert!(rep.curvature <= 1e-12, "{rep:?}");
    }
}
