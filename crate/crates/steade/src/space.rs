//! Typed hyperparameter search spaces and the warping bijection onto the
//! unit cube where every surrogate and the DE machinery operate.
//!
//! Real and integer parameters map affinely onto one cube coordinate
//! (optionally through log10 first); categorical parameters occupy a
//! one-hot block of one coordinate per category. Decoding rounds integers
//! half-up on the native grid and picks categoricals by argmax, ties going
//! to the lowest category index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for cube coordinates slightly outside [0, 1] during decoding.
const CUBE_TOL: f64 = 1e-9;

/// Axis transform applied to real/integer parameters before the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WarpKind {
    #[default]
    Linear,
    Log10,
}

/// A single parameter definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamDef {
    Real {
        name: String,
        bounds: (f64, f64),
        #[serde(default)]
        warp: WarpKind,
    },
    Integer {
        name: String,
        bounds: (i64, i64),
        #[serde(default)]
        warp: WarpKind,
    },
    Categorical { name: String, categories: Vec<String> },
}

impl ParamDef {
    pub fn name(&self) -> &str {
        match self {
            ParamDef::Real { name, .. }
            | ParamDef::Integer { name, .. }
            | ParamDef::Categorical { name, .. } => name,
        }
    }

    /// Number of cube coordinates this parameter occupies.
    pub fn width(&self) -> usize {
        match self {
            ParamDef::Real { .. } | ParamDef::Integer { .. } => 1,
            ParamDef::Categorical { categories, .. } => categories.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ParamDef::Real { name, bounds: (lo, hi), warp } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidSpace(format!(
                        "real parameter {name} needs finite lower < upper, got [{lo}, {hi}]"
                    )));
                }
                if *warp == WarpKind::Log10 && *lo <= 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "log10 warp on {name} requires lower > 0, got {lo}"
                    )));
                }
            }
            ParamDef::Integer { name, bounds: (lo, hi), warp } => {
                if lo >= hi {
                    return Err(Error::InvalidSpace(format!(
                        "integer parameter {name} needs lower < upper, got [{lo}, {hi}]"
                    )));
                }
                if *warp == WarpKind::Log10 && *lo <= 0 {
                    return Err(Error::InvalidSpace(format!(
                        "log10 warp on {name} requires lower > 0, got {lo}"
                    )));
                }
            }
            ParamDef::Categorical { name, categories } => {
                if categories.len() < 2 {
                    return Err(Error::InvalidSpace(format!(
                        "categorical {name} needs at least 2 categories"
                    )));
                }
                let mut seen = categories.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != categories.len() {
                    return Err(Error::InvalidSpace(format!(
                        "categorical {name} has duplicate categories"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A native value assigned to one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

/// A full native assignment, keyed by parameter name.
pub type Config = BTreeMap<String, ParamValue>;

/// An ordered, immutable search space with a bijective map to [0, 1]^D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    params: Vec<ParamDef>,
    dimension: usize,
}

impl ParamSpace {
    pub fn new(params: Vec<ParamDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidSpace("space has no parameters".into()));
        }
        let mut names: Vec<&str> = params.iter().map(|p| p.name()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != params.len() {
            return Err(Error::InvalidSpace("duplicate parameter names".into()));
        }
        for p in &params {
            p.validate()?;
        }
        let dimension = params.iter().map(ParamDef::width).sum();
        Ok(Self { params, dimension })
    }

    /// Pure real box space with linear warps and generated names `x0..`.
    pub fn real_box(bounds: &[(f64, f64)]) -> Result<Self> {
        let params = bounds
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| ParamDef::Real {
                name: format!("x{i}"),
                bounds: (lo, hi),
                warp: WarpKind::Linear,
            })
            .collect();
        Self::new(params)
    }

    /// Parse a space from a JSON array of parameter definitions:
    /// `[{"name": "lr", "kind": "real", "bounds": [1e-4, 1e-1], "warp": "log10"},
    ///   {"name": "depth", "kind": "integer", "bounds": [1, 12]},
    ///   {"name": "loss", "kind": "categorical", "categories": ["l1", "l2"]}]`
    pub fn from_json(doc: &str) -> Result<Self> {
        let params: Vec<ParamDef> =
            serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(params)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    /// Encode a native assignment as a point in [0, 1]^D.
    pub fn warp(&self, config: &Config) -> Result<Vec<f64>> {
        for key in config.keys() {
            if !self.params.iter().any(|p| p.name() == key) {
                return Err(Error::UnknownParameter(key.clone()));
            }
        }
        let mut out = Vec::with_capacity(self.dimension);
        for p in &self.params {
            let value = config
                .get(p.name())
                .ok_or_else(|| Error::UnknownParameter(format!("missing {}", p.name())))?;
            match (p, value) {
                (ParamDef::Real { name, bounds, warp }, v) => {
                    let x = match v {
                        ParamValue::Real(x) => *x,
                        ParamValue::Int(i) => *i as f64,
                        ParamValue::Cat(_) => {
                            return Err(Error::OutOfBounds {
                                name: name.clone(),
                                detail: "expected a real value".into(),
                            })
                        }
                    };
                    out.push(encode_scalar(name, x, bounds.0, bounds.1, *warp)?);
                }
                (ParamDef::Integer { name, bounds, warp }, v) => {
                    let i = match v {
                        ParamValue::Int(i) => *i,
                        ParamValue::Real(x) if x.fract() == 0.0 => *x as i64,
                        _ => {
                            return Err(Error::OutOfBounds {
                                name: name.clone(),
                                detail: "expected an integer value".into(),
                            })
                        }
                    };
                    if i < bounds.0 || i > bounds.1 {
                        return Err(Error::OutOfBounds {
                            name: name.clone(),
                            detail: format!("{i} outside [{}, {}]", bounds.0, bounds.1),
                        });
                    }
                    out.push(encode_scalar(name, i as f64, bounds.0 as f64, bounds.1 as f64, *warp)?);
                }
                (ParamDef::Categorical { name, categories }, v) => {
                    let c = match v {
                        ParamValue::Cat(c) => c,
                        _ => {
                            return Err(Error::OutOfBounds {
                                name: name.clone(),
                                detail: "expected a category".into(),
                            })
                        }
                    };
                    let idx = categories.iter().position(|k| k == c).ok_or_else(|| {
                        Error::OutOfBounds {
                            name: name.clone(),
                            detail: format!("unknown category {c}"),
                        }
                    })?;
                    for k in 0..categories.len() {
                        out.push(if k == idx { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), self.dimension);
        Ok(out)
    }

    /// Decode a cube point back to the nearest native assignment.
    pub fn unwarp(&self, v: &[f64]) -> Result<Config> {
        if v.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: v.len() });
        }
        for (i, &x) in v.iter().enumerate() {
            if !(-CUBE_TOL..=1.0 + CUBE_TOL).contains(&x) {
                return Err(Error::CubeCoordinateOutOfRange { index: i, value: x });
            }
        }
        let mut config = Config::new();
        let mut offset = 0;
        for p in &self.params {
            match p {
                ParamDef::Real { name, bounds, warp } => {
                    let t = v[offset].clamp(0.0, 1.0);
                    let x = match warp {
                        WarpKind::Linear => bounds.0 + t * (bounds.1 - bounds.0),
                        WarpKind::Log10 => {
                            let (llo, lhi) = (bounds.0.log10(), bounds.1.log10());
                            10f64.powf(llo + t * (lhi - llo))
                        }
                    };
                    config.insert(name.clone(), ParamValue::Real(x.clamp(bounds.0, bounds.1)));
                    offset += 1;
                }
                ParamDef::Integer { name, bounds, warp } => {
                    let t = v[offset].clamp(0.0, 1.0);
                    let y = match warp {
                        WarpKind::Linear => bounds.0 as f64 + t * (bounds.1 - bounds.0) as f64,
                        WarpKind::Log10 => {
                            let (llo, lhi) = ((bounds.0 as f64).log10(), (bounds.1 as f64).log10());
                            10f64.powf(llo + t * (lhi - llo))
                        }
                    };
                    // round half-up on the native grid
                    let i = (y + 0.5).floor() as i64;
                    config.insert(name.clone(), ParamValue::Int(i.clamp(bounds.0, bounds.1)));
                    offset += 1;
                }
                ParamDef::Categorical { name, categories } => {
                    let block = &v[offset..offset + categories.len()];
                    let mut arg = 0;
                    for (k, &x) in block.iter().enumerate() {
                        if x > block[arg] {
                            arg = k;
                        }
                    }
                    config.insert(name.clone(), ParamValue::Cat(categories[arg].clone()));
                    offset += categories.len();
                }
            }
        }
        Ok(config)
    }

    /// Encode-after-decode: snaps a raw cube point onto the image of the
    /// native grid. Idempotent, and the identity for pure-real spaces up to
    /// floating-point roundtrip error.
    pub fn snap(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.warp(&self.unwarp(v)?)
    }
}

fn encode_scalar(name: &str, x: f64, lo: f64, hi: f64, warp: WarpKind) -> Result<f64> {
    if !x.is_finite() || x < lo || x > hi {
        return Err(Error::OutOfBounds {
            name: name.to_string(),
            detail: format!("{x} outside [{lo}, {hi}]"),
        });
    }
    let t = match warp {
        WarpKind::Linear => (x - lo) / (hi - lo),
        WarpKind::Log10 => {
            if x <= 0.0 {
                return Err(Error::OutOfBounds {
                    name: name.to_string(),
                    detail: format!("{x} not positive under log10 warp"),
                });
            }
            (x.log10() - lo.log10()) / (hi.log10() - lo.log10())
        }
    };
    Ok(t.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space_1d(lo: f64, hi: f64, warp: WarpKind) -> ParamSpace {
        ParamSpace::new(vec![ParamDef::Real { name: "x".into(), bounds: (lo, hi), warp }]).unwrap()
    }

    #[test]
    fn warp_identity_bounds() {
        let s = space_1d(0.0, 1.0, WarpKind::Linear);
        let mut cfg = Config::new();
        cfg.insert("x".into(), ParamValue::Real(0.3));
        assert_eq!(s.warp(&cfg).unwrap(), vec![0.3]);
    }

    #[test]
    fn warp_log10_midpoint() {
        let s = space_1d(1e-3, 1e1, WarpKind::Log10);
        let mut cfg = Config::new();
        cfg.insert("x".into(), ParamValue::Real(1e-1));
        let v = s.warp(&cfg).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn warp_categorical_one_hot() {
        let s = ParamSpace::new(vec![ParamDef::Categorical {
            name: "c".into(),
            categories: vec!["a".into(), "b".into(), "c".into()],
        }])
        .unwrap();
        let mut cfg = Config::new();
        cfg.insert("c".into(), ParamValue::Cat("b".into()));
        assert_eq!(s.warp(&cfg).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn unwarp_integer_midpoint() {
        let s = ParamSpace::new(vec![ParamDef::Integer {
            name: "n".into(),
            bounds: (0, 10),
            warp: WarpKind::Linear,
        }])
        .unwrap();
        let cfg = s.unwarp(&[0.5]).unwrap();
        assert_eq!(cfg["n"], ParamValue::Int(5));
    }

    #[test]
    fn unwarp_categorical_tie_breaks_low() {
        let s = ParamSpace::new(vec![ParamDef::Categorical {
            name: "c".into(),
            categories: vec!["a".into(), "b".into(), "c".into()],
        }])
        .unwrap();
        let cfg = s.unwarp(&[0.2, 0.2, 0.2]).unwrap();
        assert_eq!(cfg["c"], ParamValue::Cat("a".into()));
    }

    #[test]
    fn unwarp_rejects_bad_inputs() {
        let s = space_1d(0.0, 1.0, WarpKind::Linear);
        assert!(matches!(s.unwarp(&[0.1, 0.2]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            s.unwarp(&[1.1]),
            Err(Error::CubeCoordinateOutOfRange { .. })
        ));
        // within tolerance is clamped, not rejected
        assert!(s.unwarp(&[1.0 + 1e-10]).is_ok());
    }

    #[test]
    fn warp_rejects_bad_inputs() {
        let s = space_1d(0.0, 1.0, WarpKind::Linear);
        let mut cfg = Config::new();
        cfg.insert("y".into(), ParamValue::Real(0.3));
        assert!(matches!(s.warp(&cfg), Err(Error::UnknownParameter(_))));
        let mut cfg = Config::new();
        cfg.insert("x".into(), ParamValue::Real(1.5));
        assert!(matches!(s.warp(&cfg), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn log10_requires_positive_lower() {
        let r = ParamSpace::new(vec![ParamDef::Real {
            name: "x".into(),
            bounds: (0.0, 1.0),
            warp: WarpKind::Log10,
        }]);
        assert!(matches!(r, Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn real_monotone_in_cube() {
        for warp in [WarpKind::Linear, WarpKind::Log10] {
            let s = space_1d(0.5, 32.0, warp);
            let mut prev = -1.0;
            for k in 1..=20 {
                let mut cfg = Config::new();
                cfg.insert("x".into(), ParamValue::Real(0.5 + 31.5 * k as f64 / 20.0));
                let v = s.warp(&cfg).unwrap()[0];
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn from_json_roundtrip() {
        let doc = r#"[
            {"name": "lr", "kind": "real", "bounds": [1e-4, 1e-1], "warp": "log10"},
            {"name": "depth", "kind": "integer", "bounds": [1, 12]},
            {"name": "loss", "kind": "categorical", "categories": ["l1", "l2"]}
        ]"#;
        let s = ParamSpace::from_json(doc).unwrap();
        assert_eq!(s.dimension(), 4);
        let mut cfg = Config::new();
        cfg.insert("lr".into(), ParamValue::Real(1e-2));
        cfg.insert("depth".into(), ParamValue::Int(3));
        cfg.insert("loss".into(), ParamValue::Cat("l2".into()));
        let v = s.warp(&cfg).unwrap();
        assert_eq!(s.unwarp(&v).unwrap(), cfg);
    }
}
