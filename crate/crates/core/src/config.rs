//! Case configuration: flat `key = value` text with command-line overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::{Normalization, MIN_SUBGRID_RATIO};
use crate::geometry::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaMethod {
    Quadrature,
    Poisson,
}

/// Field advecting the filtered unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdvectingField {
    /// Full-space filter of `grad G`.
    Filtered,
    /// Unfiltered `grad G`.
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub delta_f_over_d: f64,
    pub delta_f_over_dx: f64,
    pub delta_f_over_dxf: f64,
    pub cfl: f64,
    pub periods: usize,
    pub sfs_enabled: bool,
    pub circle_center: [f64; 2],
    pub diameter: f64,
    pub domain: DomainSpec,
    pub output_dir: PathBuf,
    /// Phases within a period at which errors are reported and snapshots written.
    pub phases: Vec<f64>,
    pub alpha_method: AlphaMethod,
    /// Marker spacing in units of the grid spacing.
    pub marker_spacing_factor: f64,
    pub advecting_field: AdvectingField,
    pub kernel_normalization: Normalization,
    /// Indicator samples per direction inside cut subgrid cells.
    pub cut_cell_samples: usize,
    /// Error time-series samples per period.
    pub samples_per_period: usize,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            delta_f_over_d: 1.0 / 12.0,
            delta_f_over_dx: 16.0,
            delta_f_over_dxf: 32.0,
            cfl: 0.1,
            periods: 1,
            sfs_enabled: false,
            circle_center: [0.0, 0.0],
            diameter: 0.4,
            domain: DomainSpec::default(),
            output_dir: PathBuf::from("out"),
            phases: vec![0.0, 0.125, 0.25, 0.5, 0.75],
            alpha_method: AlphaMethod::Quadrature,
            marker_spacing_factor: 1.0,
            advecting_field: AdvectingField::Filtered,
            kernel_normalization: Normalization::Analytic,
            cut_cell_samples: 1,
            samples_per_period: 8,
        }
    }
}

pub const KEYS: &[&str] = &[
    "delta_f_over_D",
    "delta_f_over_dx",
    "delta_f_over_dxf",
    "cfl",
    "periods",
    "sfs_enabled",
    "circle_center",
    "D",
    "Lx",
    "Ly",
    "output_dir",
    "phases",
    "alpha_method",
    "marker_spacing_factor",
    "advecting_field",
    "kernel_normalization",
    "cut_cell_samples",
    "samples_per_period",
];

/// Parses a number, accepting fractions such as `1/12`.
pub fn parse_number(key: &str, text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("{key}: cannot parse '{text}' as a number"));
    let v = match text.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            n / d
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_bool(key: &str, text: &str) -> Result<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(Error::Parse(format!(
            "{key}: expected on/off, got '{other}'"
        ))),
    }
}

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_number(key, s))
        .collect()
}

fn parse_count(key: &str, text: &str) -> Result<usize> {
    text.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "{key}: expected a non-negative integer, got '{}'",
            text.trim()
        ))
    })
}

impl CaseConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                ))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one override without validating the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "delta_f_over_D" => self.delta_f_over_d = parse_number(key, value)?,
            "delta_f_over_dx" => self.delta_f_over_dx = parse_number(key, value)?,
            "delta_f_over_dxf" => self.delta_f_over_dxf = parse_number(key, value)?,
            "cfl" => self.cfl = parse_number(key, value)?,
            "periods" => self.periods = parse_count(key, value)?,
            "sfs_enabled" => self.sfs_enabled = parse_bool(key, value)?,
            "circle_center" => {
                let v = parse_list(key, value)?;
                if v.len() != 2 {
                    return Err(Error::Parse(format!(
                        "{key}: expected 'x, y', got '{value}'"
                    )));
                }
                self.circle_center = [v[0], v[1]];
            }
            "D" => self.diameter = parse_number(key, value)?,
            "Lx" => self.domain.lx = parse_number(key, value)?,
            "Ly" => self.domain.ly = parse_number(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "phases" => self.phases = parse_list(key, value)?,
            "alpha_method" => {
                self.alpha_method = match value.to_ascii_lowercase().as_str() {
                    "quadrature" => AlphaMethod::Quadrature,
                    "poisson" => AlphaMethod::Poisson,
                    _ => {
                        return Err(Error::Parse(format!(
                            "{key}: expected quadrature or poisson, got '{value}'"
                        )))
                    }
                }
            }
            "marker_spacing_factor" => self.marker_spacing_factor = parse_number(key, value)?,
            "advecting_field" => {
                self.advecting_field = match value.to_ascii_lowercase().as_str() {
                    "filtered" => AdvectingField::Filtered,
                    "pointwise" => AdvectingField::Pointwise,
                    _ => {
                        return Err(Error::Parse(format!(
                            "{key}: expected filtered or pointwise, got '{value}'"
                        )))
                    }
                }
            }
            "kernel_normalization" => {
                self.kernel_normalization = match value.to_ascii_lowercase().as_str() {
                    "analytic" => Normalization::Analytic,
                    "discrete" => Normalization::Discrete,
                    _ => {
                        return Err(Error::Parse(format!(
                            "{key}: expected analytic or discrete, got '{value}'"
                        )))
                    }
                }
            }
            "cut_cell_samples" => self.cut_cell_samples = parse_count(key, value)?,
            "samples_per_period" => self.samples_per_period = parse_count(key, value)?,
            _ => return Err(Error::Parse(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{key} must be positive, got {v}")))
            }
        };
        positive("delta_f_over_D", self.delta_f_over_d)?;
        positive("delta_f_over_dx", self.delta_f_over_dx)?;
        positive("delta_f_over_dxf", self.delta_f_over_dxf)?;
        positive("D", self.diameter)?;
        positive("marker_spacing_factor", self.marker_spacing_factor)?;
        positive("Lx", self.domain.lx)?;
        positive("Ly", self.domain.ly)?;
        if self.delta_f_over_dxf < MIN_SUBGRID_RATIO {
            return Err(Error::Config(format!(
                "delta_f_over_dxf = {} is below the quadrature floor of {MIN_SUBGRID_RATIO}",
                self.delta_f_over_dxf
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if self.periods < 1 {
            return Err(Error::Config("periods must be at least 1".into()));
        }
        if self.samples_per_period < 1 || self.cut_cell_samples < 1 {
            return Err(Error::Config(
                "samples_per_period and cut_cell_samples must be at least 1".into(),
            ));
        }
        if let Some(p) = self.phases.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("phases must lie in [0, 1], got {p}")));
        }
        Ok(())
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f_over_d * self.diameter
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Serializes back to the `key = value` format accepted by [`CaseConfig::parse`].
    pub fn to_key_values(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|p| format!("{p:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("delta_f_over_D", format!("{:?}", self.delta_f_over_d));
        kv("delta_f_over_dx", format!("{:?}", self.delta_f_over_dx));
        kv("delta_f_over_dxf", format!("{:?}", self.delta_f_over_dxf));
        kv("cfl", format!("{:?}", self.cfl));
        kv("periods", self.periods.to_string());
        kv(
            "sfs_enabled",
            if self.sfs_enabled { "on" } else { "off" }.into(),
        );
        kv("circle_center", list(&self.circle_center));
        kv("D", format!("{:?}", self.diameter));
        kv("Lx", format!("{:?}", self.domain.lx));
        kv("Ly", format!("{:?}", self.domain.ly));
        kv("output_dir", self.output_dir.display().to_string());
        kv("phases", list(&self.phases));
        kv(
            "alpha_method",
            match self.alpha_method {
                AlphaMethod::Quadrature => "quadrature",
                AlphaMethod::Poisson => "poisson",
            }
            .into(),
        );
        kv(
            "marker_spacing_factor",
            format!("{:?}", self.marker_spacing_factor),
        );
        kv(
            "advecting_field",
            match self.advecting_field {
                AdvectingField::Filtered => "filtered",
                AdvectingField::Pointwise => "pointwise",
            }
            .into(),
        );
        kv(
            "kernel_normalization",
            match self.kernel_normalization {
                Normalization::Analytic => "analytic",
                Normalization::Discrete => "discrete",
            }
            .into(),
        );
        kv("cut_cell_samples", self.cut_cell_samples.to_string());
        kv("samples_per_period", self.samples_per_period.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = CaseConfig::parse("").unwrap();
        assert_eq!(cfg, CaseConfig::default());
        assert_eq!(cfg.delta_f_over_dx, 16.0);
        assert_eq!(cfg.delta_f_over_dxf, 32.0);
        assert_eq!(cfg.cfl, 0.1);
        assert_eq!(cfg.domain, DomainSpec { lx: 2.0, ly: 2.0 });
        assert_eq!(cfg.diameter, 0.4);
    }

    #[test]
    fn rejects_invalid_values() {
        let err = CaseConfig::parse("cfl = 0").unwrap_err().to_string();
        assert!(err.contains("cfl"), "{err}");
        let err = CaseConfig::parse("delta_f_over_dxf = 2")
            .unwrap_err()
            .to_string();
        assert!(err.contains("delta_f_over_dxf"), "{err}");
        assert!(CaseConfig::parse("cfl = 1.5").is_err());
        assert!(CaseConfig::parse("periods = 0").is_err());
        assert!(CaseConfig::parse("delta_f_over_D = -1").is_err());
        let err = CaseConfig::parse("bogus = 3").unwrap_err().to_string();
        assert!(err.contains("bogus"));
        assert!(CaseConfig::parse("cfl 0.2").is_err());
    }

    #[test]
    fn parses_fractions_lists_and_flags() {
        let cfg = CaseConfig::parse(
            "# appendix location\ndelta_f_over_D = 1/12\ncircle_center = -0.26, 0.68\nsfs_enabled = on\nphases = 0.25, 1/2\nalpha_method = poisson\n",
        )
        .unwrap();
        assert!((cfg.delta_f_over_d - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(cfg.circle_center, [-0.26, 0.68]);
        assert!(cfg.sfs_enabled);
        assert_eq!(cfg.phases, vec![0.25, 0.5]);
        assert_eq!(cfg.alpha_method, AlphaMethod::Poisson);
    }

    #[test]
    fn key_values_round_trip() {
        let mut cfg = CaseConfig::default();
        cfg.set("delta_f_over_D", "1/7").unwrap();
        cfg.set("circle_center", "0.5, -0.34").unwrap();
        cfg.set("advecting_field", "pointwise").unwrap();
        let back = CaseConfig::parse(&cfg.to_key_values()).unwrap();
        assert_eq!(back, cfg);
        for k in KEYS {
            assert!(cfg.to_key_values().contains(&format!("{k} = ")), "{k}");
        }
    }
}
