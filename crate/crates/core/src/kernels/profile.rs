//! Radial kernel profiles `k(r)` with `K(y) = k(|y|)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial profile of a symmetric jump kernel.
///
/// Power-law pieces are written `coef · r^{-d-order}`, so `order` is the
/// Lévy order of the piece independently of the dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `coef · r^{-d-order}` on `(0, ∞)`.
    Power { coef: f64, order: f64 },
    /// Inner power law on `(0, split]`, outer power law beyond.
    Piecewise {
        inner_coef: f64,
        inner_order: f64,
        outer_coef: f64,
        outer_order: f64,
        split: f64,
    },
    /// Samples interpolated log-linearly in `r`, with power-law
    /// extrapolation on both ends.
    Tabulated {
        r: Vec<f64>,
        k: Vec<f64>,
        tail_order: f64,
    },
    /// `base` with its sign flipped to negative on `[lo, hi]`.
    NegativeBand {
        base: Box<RadialProfile>,
        lo: f64,
        hi: f64,
    },
}

impl RadialProfile {
    pub fn truncated(coef: f64, order: f64, cutoff: f64) -> Self {
        RadialProfile::Piecewise {
            inner_coef: coef,
            inner_order: order,
            outer_coef: 0.0,
            outer_order: order,
            split: cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Power { coef, order } => {
                finite(&[*coef, *order], "power profile")?;
            }
            RadialProfile::Piecewise {
                inner_coef,
                inner_order,
                outer_coef,
                outer_order,
                split,
            } => {
                finite(
                    &[*inner_coef, *inner_order, *outer_coef, *outer_order, *split],
                    "piecewise profile",
                )?;
                if *split <= 0.0 {
                    return Err(Error::MalformedSpec(
                        "piecewise split must be positive".into(),
                    ));
                }
            }
            RadialProfile::Tabulated { r, k, tail_order } => {
                if r.len() < 2 || r.len() != k.len() {
                    return Err(Error::MalformedSpec(
                        "tabulated profile needs at least two (r, k) rows".into(),
                    ));
                }
                finite(r, "tabulated radii")?;
                finite(k, "tabulated values")?;
                finite(&[*tail_order], "tail exponent")?;
                if r[0] <= 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::MalformedSpec(
                        "tabulated radii must be positive and strictly increasing".into(),
                    ));
                }
                if k[0] == 0.0 || k[1] == 0.0 || (k[0] > 0.0) != (k[1] > 0.0) {
                    return Err(Error::MalformedSpec(
                        "first two tabulated values must share a nonzero sign".into(),
                    ));
                }
            }
            RadialProfile::NegativeBand { base, lo, hi } => {
                base.validate()?;
                finite(&[*lo, *hi], "negative band")?;
                if !(*lo > 0.0 && hi > lo) {
                    return Err(Error::MalformedSpec(
                        "negative band needs 0 < lo < hi".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `k(r)` for `r > 0` in dimension `d`.
    pub fn value(&self, r: f64, d: usize) -> f64 {
        let d = d as f64;
        match self {
            RadialProfile::Power { coef, order } => coef * r.powf(-d - order),
            RadialProfile::Piecewise {
                inner_coef,
                inner_order,
                outer_coef,
                outer_order,
                split,
            } => {
                if r <= *split {
                    inner_coef * r.powf(-d - inner_order)
                } else {
                    outer_coef * r.powf(-d - outer_order)
                }
            }
            RadialProfile::Tabulated {
                r: rs,
                k,
                tail_order,
            } => {
                let n = rs.len();
                if r <= rs[0] {
                    let (c, a) = self.inner_power(d as usize);
                    return c * r.powf(-d - a);
                }
                if r >= rs[n - 1] {
                    return k[n - 1] * (r / rs[n - 1]).powf(-d - tail_order);
                }
                let i = rs.partition_point(|&x| x <= r) - 1;
                let (r0, r1, k0, k1) = (rs[i], rs[i + 1], k[i], k[i + 1]);
                let t = (r / r0).ln() / (r1 / r0).ln();
                if k0 > 0.0 && k1 > 0.0 {
                    (k0.ln() + t * (k1.ln() - k0.ln())).exp()
                } else if k0 < 0.0 && k1 < 0.0 {
                    -((-k0).ln() + t * ((-k1).ln() - (-k0).ln())).exp()
                } else {
                    k0 + t * (k1 - k0)
                }
            }
            RadialProfile::NegativeBand { base, lo, hi } => {
                let v = base.value(r, d as usize);
                if r >= *lo && r <= *hi {
                    -v.abs()
                } else {
                    v
                }
            }
        }
    }

    /// Radii where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Power { .. } => Vec::new(),
            RadialProfile::Piecewise { split, .. } => vec![*split],
            RadialProfile::Tabulated { r, .. } => r.clone(),
            RadialProfile::NegativeBand { base, lo, hi } => {
                let mut b = base.breakpoints();
                b.push(*lo);
                b.push(*hi);
                b.sort_by(f64::total_cmp);
                b
            }
        }
    }

    /// Asymptotic power law `(coef, order)` as `r → 0`.
    pub fn inner_power(&self, d: usize) -> (f64, f64) {
        match self {
            RadialProfile::Power { coef, order } => (*coef, *order),
            RadialProfile::Piecewise {
                inner_coef,
                inner_order,
                ..
            } => (*inner_coef, *inner_order),
            RadialProfile::Tabulated { r, k, .. } => {
                let slope = (k[1] / k[0]).ln() / (r[1] / r[0]).ln();
                let order = -slope - d as f64;
                (k[0] * r[0].powf(d as f64 + order), order)
            }
            RadialProfile::NegativeBand { base, .. } => base.inner_power(d),
        }
    }

    /// Asymptotic power law `(coef, order)` as `r → ∞`; exact beyond the
    /// largest breakpoint.
    pub fn tail_power(&self, d: usize) -> (f64, f64) {
        match self {
            RadialProfile::Power { coef, order } => (*coef, *order),
            RadialProfile::Piecewise {
                outer_coef,
                outer_order,
                ..
            } => (*outer_coef, *outer_order),
            RadialProfile::Tabulated { r, k, tail_order } => {
                let n = r.len();
                (k[n - 1] * r[n - 1].powf(d as f64 + tail_order), *tail_order)
            }
            RadialProfile::NegativeBand { base, .. } => base.tail_power(d),
        }
    }

    /// Read a two-column `r k(r)` table. The tail exponent is declared in a
    /// header line of the form `# tail_order = 0.5`.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text, &path.display().to_string())
    }

    pub fn parse_table(text: &str, context: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            context: format!("{context}:{line}"),
            message,
        };
        let mut tail = None;
        let mut r = Vec::new();
        let mut k = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    if key.trim() == "tail_order" {
                        let v = value
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| parse_err(no + 1, format!("tail_order: {e}")))?;
                        tail = Some(v);
                    }
                }
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err(no + 1, "expected two columns".into()));
            };
            r.push(
                a.parse::<f64>()
                    .map_err(|e| parse_err(no + 1, e.to_string()))?,
            );
            k.push(
                b.parse::<f64>()
                    .map_err(|e| parse_err(no + 1, e.to_string()))?,
            );
        }
        let Some(tail_order) = tail else {
            return Err(parse_err(0, "missing '# tail_order = ...' header".into()));
        };
        let p = RadialProfile::Tabulated { r, k, tail_order };
        p.validate()?;
        Ok(p)
    }

    /// Two-column text in the format read by [`RadialProfile::parse_table`].
    pub fn write_table(&self, d: usize, radii: &[f64]) -> String {
        let (_, tail) = self.tail_power(d);
        let mut s = format!("# tail_order = {tail}\n");
        for &r in radii {
            s.push_str(&format!("{r:.17e} {:.17e}\n", self.value(r, d)));
        }
        s
    }
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::MalformedSpec(format!(
            "{what} contains non-finite values"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_and_band_values() {
        let p = RadialProfile::truncated(1.0, 0.5, 1.0);
        assert_eq!(p.value(0.25, 1), 0.25f64.powf(-1.5));
        assert_eq!(p.value(2.0, 1), 0.0);
        let b = RadialProfile::NegativeBand {
            base: Box::new(RadialProfile::Power {
                coef: 1.0,
                order: 0.5,
            }),
            lo: 0.5,
            hi: 0.75,
        };
        assert!(b.value(0.6, 2) < 0.0);
        assert!(b.value(0.4, 2) > 0.0);
    }

    #[test]
    fn table_roundtrip_reproduces_power_law() {
        let p = RadialProfile::Power {
            coef: 0.3,
            order: 0.7,
        };
        let radii: Vec<f64> = (0..41).map(|i| 2f64.powf(-10.0 + 0.5 * i as f64)).collect();
        let text = p.write_table(1, &radii);
        let t = RadialProfile::parse_table(&text, "memory").unwrap();
        for r in [1e-6, 0.013, 0.5, 3.0, 1e5] {
            let rel = (t.value(r, 1) / p.value(r, 1) - 1.0).abs();
            assert!(rel < 1e-10, "r={r} rel={rel}");
        }
        let (c, a) = t.inner_power(1);
        assert!((c - 0.3).abs() < 1e-10 && (a - 0.7).abs() < 1e-10);
    }

    #[test]
    fn table_without_header_is_rejected() {
        let err = RadialProfile::parse_table("1 2\n2 1\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
