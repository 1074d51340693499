//! Error norms, order fitting and line cuts.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// `(L2, Linf)` of `q - reference` with `L2 = sqrt(sum e^2 dx^2)`.
pub fn error_norms(q: &ScalarField, reference: &ScalarField) -> Result<(f64, f64)> {
    q.grid.check_same(&reference.grid)?;
    let diff = q.combine(1.0, reference, -1.0);
    Ok((diff.l2(), diff.max_abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Orders between consecutive points, for diagnostics.
    pub pairwise: Vec<f64>,
}

/// Least-squares slope of `ln(error)` against `ln(knob)`.
pub fn fit_order(knobs: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if knobs.len() != errors.len() {
        return Err(Error::Fit(format!(
            "{} knob values but {} errors",
            knobs.len(),
            errors.len()
        )));
    }
    if knobs.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points, got {}",
            knobs.len()
        )));
    }
    if knobs
        .iter()
        .chain(errors)
        .any(|v| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::Fit(
            "knob values and errors must be positive and finite".into(),
        ));
    }
    let xs: Vec<f64> = knobs.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("knob values are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let pairwise = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(OrderFit {
        slope,
        intercept,
        residual,
        pairwise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Bilinear samples of `field` at `n` equally spaced points from `p0` to `p1`.
pub fn line_cut(
    field: &ScalarField,
    p0: [f64; 2],
    p1: [f64; 2],
    n: usize,
) -> Result<Vec<CutSample>> {
    let g = &field.grid;
    let inside = |p: [f64; 2]| {
        let tol = 1e-9 * g.dx;
        p[0] >= g.x0 - tol
            && p[0] <= g.x0 + g.lx() + tol
            && p[1] >= g.y0 - tol
            && p[1] <= g.y0 + g.ly() + tol
    };
    if !inside(p0) || !inside(p1) {
        return Err(Error::Config(format!(
            "cut endpoints {p0:?} -> {p1:?} leave the grid"
        )));
    }
    if n < 2 {
        return Err(Error::Config("a line cut needs at least 2 samples".into()));
    }
    let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
    Ok((0..n)
        .map(|k| {
            let f = k as f64 / (n - 1) as f64;
            let x = p0[0] + f * (p1[0] - p0[0]);
            let y = p0[1] + f * (p1[1] - p0[1]);
            CutSample {
                s: f * len,
                x,
                y,
                value: field.sample(x, y),
            }
        })
        .collect())
}

pub fn cut_to_csv(samples: &[CutSample]) -> String {
    let mut out = String::from("s,x,y,value\n");
    for c in samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            c.s, c.x, c.y, c.value
        ));
    }
    out
}

/// Which parameter a convergence study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Knob {
    DeltaFOverD,
    DeltaFOverDx,
    DeltaFOverDxf,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::DeltaFOverD => "delta_f_over_D",
            Knob::DeltaFOverDx => "delta_f_over_dx",
            Knob::DeltaFOverDxf => "delta_f_over_dxf",
        }
    }
}

/// Errors of one study point at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseError {
    pub phase: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub knob: Knob,
    pub values: Vec<f64>,
    /// `norms[k]` holds the phase errors of `values[k]`.
    pub norms: Vec<Vec<PhaseError>>,
    /// `(phase, L2 fit, Linf fit)`; empty when fewer than 3 points.
    pub fits: Vec<(f64, OrderFit, OrderFit)>,
}

impl ConvergenceRecord {
    /// Builds the record and fits slopes against `fit_abscissa(value)`.
    pub fn new(
        knob: Knob,
        values: Vec<f64>,
        norms: Vec<Vec<PhaseError>>,
        fit_abscissa: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if values.len() != norms.len() {
            return Err(Error::Fit(
                "one set of phase errors per knob value required".into(),
            ));
        }
        let monotone =
            values.windows(2).all(|w| w[1] > w[0]) || values.windows(2).all(|w| w[1] < w[0]);
        if !monotone {
            return Err(Error::Fit("knob values must be strictly monotone".into()));
        }
        let mut fits = Vec::new();
        if values.len() >= 3 {
            let xs: Vec<f64> = values.iter().map(|&v| fit_abscissa(v)).collect();
            for (p, pe) in norms[0].iter().enumerate() {
                let l2: Vec<f64> = norms.iter().map(|n| n[p].l2).collect();
                let linf: Vec<f64> = norms.iter().map(|n| n[p].linf).collect();
                fits.push((pe.phase, fit_order(&xs, &l2)?, fit_order(&xs, &linf)?));
            }
        }
        Ok(Self {
            knob,
            values,
            norms,
            fits,
        })
    }

    /// CSV `knob,value,phase,L2,Linf,slope_L2,slope_Linf,pairwise_L2,pairwise_Linf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "knob,value,phase,L2,Linf,slope_L2,slope_Linf,pairwise_L2,pairwise_Linf\n",
        );
        for (k, (v, phases)) in self.values.iter().zip(&self.norms).enumerate() {
            for pe in phases {
                let fit = self.fits.iter().find(|f| f.0 == pe.phase);
                let (s2, sinf) = fit.map_or((f64::NAN, f64::NAN), |f| (f.1.slope, f.2.slope));
                let (p2, pinf) = match (fit, k) {
                    (Some(f), k) if k > 0 => (f.1.pairwise[k - 1], f.2.pairwise[k - 1]),
                    _ => (f64::NAN, f64::NAN),
                };
                out.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    self.knob.name(),
                    v,
                    pe.phase,
                    pe.l2,
                    pe.linf,
                    s2,
                    sinf,
                    p2,
                    pinf
                ));
            }
        }
        out
    }
}
