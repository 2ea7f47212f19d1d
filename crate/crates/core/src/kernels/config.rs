//! `[operator]` config section.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KernelForm, LevyKernelSpec, RadialProfile};
use crate::error::{Error, Result};

/// Flat key-value form of a [`LevyKernelSpec`].
///
/// `form` is one of `fractional_laplacian`, `log_damped`, `radial_table`
/// (profile read from `profile_file`) or `piecewise` (inner and outer power
/// laws joined at `split`). `negative_band = [lo, hi]` flips the sign of an
/// explicit profile on that radial interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub form: String,
    pub alpha: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_band: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonnegative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

fn require(v: Option<f64>, key: &str, form: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("[operator] form = \"{form}\" requires key '{key}'")))
}

impl OperatorSection {
    /// Build the kernel description; relative profile paths resolve against `base_dir`.
    pub fn to_spec(&self, dim: usize, base_dir: &Path) -> Result<LevyKernelSpec> {
        let form = self.form.as_str();
        let reject = |keys: &[(&str, bool)]| -> Result<()> {
            for (k, present) in keys {
                if *present {
                    return Err(Error::Config(format!(
                        "[operator] key '{k}' does not apply to form \"{form}\""
                    )));
                }
            }
            Ok(())
        };
        let piecewise_keys = [
            ("inner_coef", self.inner_coef.is_some()),
            ("inner_order", self.inner_order.is_some()),
            ("outer_coef", self.outer_coef.is_some()),
            ("outer_order", self.outer_order.is_some()),
            ("split", self.split.is_some()),
        ];
        let log_keys = [("mu", self.mu.is_some()), ("lambda", self.lambda.is_some())];
        let kernel_form = match form {
            "fractional_laplacian" => {
                reject(&log_keys)?;
                reject(&piecewise_keys)?;
                reject(&[
                    ("profile_file", self.profile_file.is_some()),
                    ("negative_band", self.negative_band.is_some()),
                ])?;
                KernelForm::FractionalLaplacian
            }
            "log_damped" => {
                reject(&piecewise_keys)?;
                reject(&[
                    ("profile_file", self.profile_file.is_some()),
                    ("negative_band", self.negative_band.is_some()),
                ])?;
                KernelForm::LogDamped {
                    mu: require(self.mu, "mu", form)?,
                    lambda: require(self.lambda, "lambda", form)?,
                }
            }
            "radial_table" | "piecewise" => {
                reject(&log_keys)?;
                let mut profile = if form == "radial_table" {
                    reject(&piecewise_keys)?;
                    let Some(file) = &self.profile_file else {
                        return Err(Error::Config(
                            "[operator] form = \"radial_table\" requires key 'profile_file'".into(),
                        ));
                    };
                    RadialProfile::load_table(&base_dir.join(file))?
                } else {
                    reject(&[("profile_file", self.profile_file.is_some())])?;
                    RadialProfile::Piecewise {
                        inner_coef: require(self.inner_coef, "inner_coef", form)?,
                        inner_order: self.inner_order.unwrap_or(self.alpha),
                        outer_coef: require(self.outer_coef, "outer_coef", form)?,
                        outer_order: require(self.outer_order, "outer_order", form)?,
                        split: self.split.unwrap_or(1.0),
                    }
                };
                if let Some([lo, hi]) = self.negative_band {
                    profile = RadialProfile::NegativeBand {
                        base: Box::new(profile),
                        lo,
                        hi,
                    };
                }
                KernelForm::RadialKernel {
                    profile,
                    declared_nonnegative: self.nonnegative.unwrap_or(false),
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "[operator] unknown form \"{other}\" (expected fractional_laplacian, log_damped, radial_table or piecewise)"
                )))
            }
        };
        if self.nonnegative.is_some() && !matches!(kernel_form, KernelForm::RadialKernel { .. }) {
            return Err(Error::Config(format!(
                "[operator] key 'nonnegative' does not apply to form \"{form}\""
            )));
        }
        let spec = LevyKernelSpec {
            dim,
            alpha: self.alpha,
            sigma: self.sigma,
            form: kernel_form,
            c1: self.c1,
            c2: self.c2,
        };
        spec.validate()
            .map_err(|e| Error::Config(format!("[operator] {e}")))?;
        Ok(spec)
    }

    /// Section for a spec whose profile (if any) is representable without a
    /// file.
    pub fn from_spec(spec: &LevyKernelSpec) -> Result<Self> {
        let mut s = OperatorSection {
            form: String::new(),
            alpha: spec.alpha,
            sigma: spec.sigma,
            mu: None,
            lambda: None,
            profile_file: None,
            inner_coef: None,
            inner_order: None,
            outer_coef: None,
            outer_order: None,
            split: None,
            negative_band: None,
            nonnegative: None,
            c1: spec.c1,
            c2: spec.c2,
        };
        match &spec.form {
            KernelForm::FractionalLaplacian => s.form = "fractional_laplacian".into(),
            KernelForm::LogDamped { mu, lambda } => {
                s.form = "log_damped".into();
                s.mu = Some(*mu);
                s.lambda = Some(*lambda);
            }
            KernelForm::RadialKernel {
                profile,
                declared_nonnegative,
            } => {
                s.form = "piecewise".into();
                s.nonnegative = Some(*declared_nonnegative);
                let base = match profile {
                    RadialProfile::NegativeBand { base, lo, hi } => {
                        s.negative_band = Some([*lo, *hi]);
                        base.as_ref()
                    }
                    p => p,
                };
                match base {
                    RadialProfile::Piecewise {
                        inner_coef,
                        inner_order,
                        outer_coef,
                        outer_order,
                        split,
                    } => {
                        s.inner_coef = Some(*inner_coef);
                        s.inner_order = Some(*inner_order);
                        s.outer_coef = Some(*outer_coef);
                        s.outer_order = Some(*outer_order);
                        s.split = Some(*split);
                    }
                    RadialProfile::Power { coef, order } => {
                        s.inner_coef = Some(*coef);
                        s.inner_order = Some(*order);
                        s.outer_coef = Some(*coef);
                        s.outer_order = Some(*order);
                        s.split = Some(1.0);
                    }
                    _ => {
                        return Err(Error::Config(
                            "tabulated profiles are written through profile_file".into(),
                        ))
                    }
                }
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<OperatorSection, toml::de::Error> {
        toml::from_str(text)
    }

    #[test]
    fn parses_log_damped() {
        let s = parse("form = \"log_damped\"\nalpha = 0.5\nsigma = 0.1\nmu = 1.0\nlambda = 3.0\n")
            .unwrap();
        let spec = s.to_spec(1, Path::new(".")).unwrap();
        assert_eq!(
            spec.form,
            KernelForm::LogDamped {
                mu: 1.0,
                lambda: 3.0
            }
        );
        assert_eq!(OperatorSection::from_spec(&spec).unwrap(), s);
    }

    #[test]
    fn missing_alpha_is_rejected() {
        assert!(parse("form = \"fractional_laplacian\"\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("form = \"fractional_laplacian\"\nalpha = 0.5\nbeta = 1\n").is_err());
        let s = parse("form = \"fractional_laplacian\"\nalpha = 0.5\nmu = 1\n").unwrap();
        assert!(matches!(
            s.to_spec(1, Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn piecewise_with_band_roundtrips() {
        let s = parse(
            "form = \"piecewise\"\nalpha = 0.6\nsigma = 0.1\ninner_coef = 1.0\nouter_coef = -0.5\nouter_order = 0.5\nsplit = 1.0\nnegative_band = [0.2, 0.3]\n",
        )
        .unwrap();
        let spec = s.to_spec(1, Path::new(".")).unwrap();
        let back = OperatorSection::from_spec(&spec).unwrap();
        assert_eq!(back.to_spec(1, Path::new(".")).unwrap(), spec);
    }

    #[test]
    fn table_profile_loads_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        let p = RadialProfile::Power {
            coef: 1.0,
            order: 0.5,
        };
        let radii: Vec<f64> = (0..20).map(|i| 2f64.powi(i - 10)).collect();
        std::fs::write(dir.path().join("k.txt"), p.write_table(1, &radii)).unwrap();
        let s = parse(
            "form = \"radial_table\"\nalpha = 0.5\nprofile_file = \"k.txt\"\nnonnegative = true\n",
        )
        .unwrap();
        let spec = s.to_spec(1, dir.path()).unwrap();
        assert!(matches!(
            spec.form,
            KernelForm::RadialKernel {
                declared_nonnegative: true,
                ..
            }
        ));
    }
}
