//! Physical inputs of the model and their `key = value` configuration format.
//!
//! ```text
//! # GaAs double dot
//! U_meV = 1
//! J_meV = 0.1
//! alpha = 3
//! temperature_K = 15
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which energy is used as the phonon gap of the `s0 ↔ s2` transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapConvention {
    /// Eigenenergy difference, `U + 2J`.
    #[default]
    Spectral,
    /// The energy appearing under the square roots of the QPC operators, `U + J`.
    Qpc,
}

impl GapConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            GapConvention::Spectral => "spectral",
            GapConvention::Qpc => "qpc",
        }
    }
}

impl FromStr for GapConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral" => Ok(GapConvention::Spectral),
            "qpc" => Ok(GapConvention::Qpc),
            other => Err(format!("expected `spectral` or `qpc`, got `{other}`")),
        }
    }
}

/// Every physical input. Energies in meV, rates in 1/ns, temperature in K.
///
/// The QPC couplings are stored unscaled; `alpha` divides them only when
/// operators are built, so sweeping `alpha` never touches the base values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T: Real = f64> {
    /// On-site charging energy `U`.
    pub charging_energy: T,
    /// Singlet–triplet splitting `J`.
    pub exchange_splitting: T,
    /// QPC bias `V = μ_S − μ_D`.
    pub bias: T,
    /// Unconditional QPC tunnelling constant before `alpha` scaling.
    pub tunneling: T,
    /// Occupation-conditioned QPC tunnelling constant before `alpha` scaling.
    pub tunneling_conditional: T,
    /// Zero-temperature emission rate of the `s2 → s0` transition.
    pub gamma_a0: T,
    /// Zero-temperature emission rate of the `s2 → s1` transition.
    pub gamma_b0: T,
    pub temperature: T,
    /// Phonon-to-QPC strength ratio; QPC couplings are divided by it.
    pub alpha: T,
    pub gap_convention: GapConvention,
}

/// Configuration keys in canonical order.
pub const CONFIG_KEYS: [&str; 10] =
    ["U_meV", "J_meV", "V_meV", "T0", "nu0", "gamma_a0_per_ns", "gamma_b0_per_ns", "temperature_K", "alpha", "gap_convention"];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = match key {
        "U" => "U_meV",
        "J" => "J_meV",
        "V" => "V_meV",
        "temperature" | "T_K" => "temperature_K",
        "gamma_a0" => "gamma_a0_per_ns",
        "gamma_b0" => "gamma_b0_per_ns",
        other => other,
    };
    CONFIG_KEYS.iter().copied().find(|c| *c == k)
}

/// GaAs parameter set: `U = 1 meV`, `J = 0.1 meV`, `V = 2 meV`, `T0 = 0.1`,
/// `nu0 = 2.25e-3`, `γ_a0 = 1.15e-3 /ns`, `γ_b0 = 6.01e-8 /ns`, `α = 1`, `T = 0 K`.
pub fn default_params<T: Real>() -> ModelParams<T> {
    ModelParams {
        charging_energy: T::lit(1.0),
        exchange_splitting: T::lit(0.1),
        bias: T::lit(2.0),
        tunneling: T::lit(0.1),
        tunneling_conditional: T::lit(2.25e-3),
        gamma_a0: T::lit(1.15e-3),
        gamma_b0: T::lit(6.01e-8),
        temperature: T::zero(),
        alpha: T::one(),
        gap_convention: GapConvention::Spectral,
    }
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        default_params()
    }
}

/// `(T0/α, ν0/α)`.
pub fn effective_couplings<T: Real>(p: &ModelParams<T>) -> Result<(T, T)> {
    if !(p.alpha > T::zero()) || !p.alpha.is_finite() {
        return Err(Error::InvalidParameter { name: "alpha", reason: format!("must be positive and finite, got {}", p.alpha) });
    }
    Ok((p.tunneling / p.alpha, p.tunneling_conditional / p.alpha))
}

impl<T: Real> ModelParams<T> {
    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_temperature(mut self, temperature: T) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_gap_convention(mut self, gap: GapConvention) -> Self {
        self.gap_convention = gap;
        self
    }

    /// Same parameters with both phonon channels switched off.
    pub fn without_phonons(mut self) -> Self {
        self.gamma_a0 = T::zero();
        self.gamma_b0 = T::zero();
        self
    }

    pub fn effective_couplings(&self) -> Result<(T, T)> {
        effective_couplings(self)
    }

    /// `U + J`, the threshold the bias must exceed.
    pub fn high_bias_threshold(&self) -> T {
        self.charging_energy + self.exchange_splitting
    }

    pub fn validate(&self) -> Result<()> {
        fn check<T: Real>(name: &'static str, value: T, ok: bool, what: &str) -> Result<()> {
            if !value.is_finite() || !ok {
                return Err(Error::InvalidParameter { name, reason: format!("must be {what}, got {value}") });
            }
            Ok(())
        }
        let zero = T::zero();
        check("U_meV", self.charging_energy, self.charging_energy > zero, "positive")?;
        check("J_meV", self.exchange_splitting, self.exchange_splitting >= zero, "non-negative")?;
        check("V_meV", self.bias, self.bias > zero, "positive")?;
        check("T0", self.tunneling, self.tunneling >= zero, "non-negative")?;
        check("nu0", self.tunneling_conditional, self.tunneling_conditional >= zero, "non-negative")?;
        check("gamma_a0_per_ns", self.gamma_a0, self.gamma_a0 >= zero, "non-negative")?;
        check("gamma_b0_per_ns", self.gamma_b0, self.gamma_b0 >= zero, "non-negative")?;
        check("temperature_K", self.temperature, self.temperature >= zero, "non-negative")?;
        check("alpha", self.alpha, self.alpha > zero, "positive")?;
        if !(self.bias > self.high_bias_threshold()) {
            return Err(Error::HighBiasViolation { v: self.bias.to_f64_lossy(), threshold: self.high_bias_threshold().to_f64_lossy() });
        }
        Ok(())
    }

    /// Sets one field from its configuration key (aliases `U`, `J`, `V`,
    /// `temperature`, `gamma_a0`, `gamma_b0` accepted). Does not validate.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let canonical = canonical_key(key.trim()).ok_or_else(|| format!("unknown key `{key}`"))?;
        let value = value.trim();
        if canonical == "gap_convention" {
            self.gap_convention = value.parse()?;
            return Ok(());
        }
        let x: T = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
        let slot = match canonical {
            "U_meV" => &mut self.charging_energy,
            "J_meV" => &mut self.exchange_splitting,
            "V_meV" => &mut self.bias,
            "T0" => &mut self.tunneling,
            "nu0" => &mut self.tunneling_conditional,
            "gamma_a0_per_ns" => &mut self.gamma_a0,
            "gamma_b0_per_ns" => &mut self.gamma_b0,
            "temperature_K" => &mut self.temperature,
            "alpha" => &mut self.alpha,
            _ => unreachable!("canonical key list and match arms out of sync"),
        };
        *slot = x;
        Ok(())
    }

    /// Value of a numeric field by canonical key.
    pub fn get(&self, key: &str) -> Option<T> {
        Some(match canonical_key(key)? {
            "U_meV" => self.charging_energy,
            "J_meV" => self.exchange_splitting,
            "V_meV" => self.bias,
            "T0" => self.tunneling,
            "nu0" => self.tunneling_conditional,
            "gamma_a0_per_ns" => self.gamma_a0,
            "gamma_b0_per_ns" => self.gamma_b0,
            "temperature_K" => self.temperature,
            "alpha" => self.alpha,
            _ => return None,
        })
    }

    /// Serialises every field in the configuration format; parsing the
    /// output reproduces the record exactly.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            match self.get(key) {
                Some(v) => writeln!(out, "{key} = {v}").unwrap(),
                None => writeln!(out, "{key} = {}", self.gap_convention.as_str()).unwrap(),
            }
        }
        out
    }
}

/// Parses configuration text on top of [`default_params`] and validates the result.
pub fn parse_config<T: Real>(text: &str) -> Result<ModelParams<T>> {
    let mut params = default_params::<T>();
    apply_config(&mut params, text)?;
    params.validate()?;
    Ok(params)
}

/// Applies configuration text as overrides to an existing record without validating.
pub fn apply_config<T: Real>(params: &mut ModelParams<T>, text: &str) -> Result<()> {
    let mut seen: Vec<&'static str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            key: None,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let canonical = canonical_key(key).ok_or_else(|| Error::Parse {
            line: line_no,
            key: Some(key.to_string()),
            message: format!("unknown key `{key}`"),
        })?;
        if seen.contains(&canonical) {
            return Err(Error::Parse { line: line_no, key: Some(key.to_string()), message: format!("duplicate key `{key}`") });
        }
        seen.push(canonical);
        params.set(canonical, value).map_err(|message| Error::Parse {
            line: line_no,
            key: Some(key.to_string()),
            message: format!("{key}: {message}"),
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_carry_gaas_values() {
        let p = default_params::<f64>();
        assert_eq!(p.gamma_a0, 1.15e-3);
        assert_eq!(p.gamma_b0, 6.01e-8);
        assert_eq!((p.charging_energy, p.exchange_splitting, p.bias), (1.0, 0.1, 2.0));
        assert_eq!((p.tunneling, p.tunneling_conditional), (0.1, 2.25e-3));
        assert!(p.bias > p.charging_energy + p.exchange_splitting);
        p.validate().unwrap();
    }

    #[test]
    fn effective_couplings_divide_by_alpha() {
        let p = default_params::<f64>();
        assert_eq!(effective_couplings(&p).unwrap(), (0.1, 2.25e-3));
        let (t, nu) = effective_couplings(&p.with_alpha(3.0)).unwrap();
        assert!((t - 0.1 / 3.0).abs() < 1e-17);
        assert!((nu - 7.5e-4).abs() < 1e-17);
        let (t, nu) = effective_couplings(&p.with_alpha(1e300)).unwrap();
        assert!(t < 1e-299 && nu < 1e-299);
        assert!(matches!(effective_couplings(&p.with_alpha(0.0)), Err(Error::InvalidParameter { name: "alpha", .. })));
        assert!(effective_couplings(&p.with_alpha(-1.0)).is_err());
    }

    #[test]
    fn config_overrides_on_top_of_defaults() {
        let p: ModelParams = parse_config("alpha = 3\ntemperature = 15").unwrap();
        assert_eq!(p, default_params().with_alpha(3.0).with_temperature(15.0));
        let q: ModelParams = parse_config("# comment only\n\nalpha = 3 # trailing\ntemperature_K=15\n").unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn empty_config_is_defaults() {
        assert_eq!(parse_config::<f64>("").unwrap(), default_params());
    }

    #[test]
    fn low_bias_is_rejected() {
        let err = parse_config::<f64>("V = 1.0").unwrap_err();
        assert!(matches!(err, Error::HighBiasViolation { .. }), "{err}");
        // Exactly at threshold is also invalid.
        assert!(parse_config::<f64>("V_meV = 1.1\nU_meV = 1.0\nJ_meV = 0.1").is_err());
    }

    #[test]
    fn parse_errors_name_the_key() {
        match parse_config::<f64>("alpha = 3\nfoo = 1").unwrap_err() {
            Error::Parse { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key.as_deref(), Some("foo"));
            }
            e => panic!("unexpected {e:?}"),
        }
        match parse_config::<f64>("nu0 = lots").unwrap_err() {
            Error::Parse { key, message, .. } => {
                assert_eq!(key.as_deref(), Some("nu0"));
                assert!(message.contains("nu0"));
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_config::<f64>("alpha 3"), Err(Error::Parse { key: None, .. })));
        assert!(matches!(parse_config::<f64>("alpha = 1\nalpha = 2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config::<f64>("alpha = -2"), Err(Error::InvalidParameter { name: "alpha", .. })));
    }

    #[test]
    fn gap_convention_parses() {
        let p: ModelParams = parse_config("gap_convention = qpc").unwrap();
        assert_eq!(p.gap_convention, GapConvention::Qpc);
        assert!(parse_config::<f64>("gap_convention = other").is_err());
    }

    #[test]
    fn f32_round_trip() {
        let p = default_params::<f32>().with_alpha(3.3).with_temperature(12.7);
        assert_eq!(parse_config::<f32>(&p.to_config_string()).unwrap(), p);
    }

    fn valid_params() -> impl Strategy<Value = ModelParams<f64>> {
        (
            1e-3f64..10.0,
            0.0f64..5.0,
            1.0001f64..10.0,
            0.0f64..1.0,
            0.0f64..0.1,
            0.0f64..1e-2,
            0.0f64..1e-6,
            0.0f64..100.0,
            1e-3f64..100.0,
            any::<bool>(),
        )
            .prop_map(|(u, j, v_ratio, t0, nu0, ga, gb, temp, alpha, qpc)| ModelParams {
                charging_energy: u,
                exchange_splitting: j,
                bias: (u + j) * v_ratio,
                tunneling: t0,
                tunneling_conditional: nu0,
                gamma_a0: ga,
                gamma_b0: gb,
                temperature: temp,
                alpha,
                gap_convention: if qpc { GapConvention::Qpc } else { GapConvention::Spectral },
            })
    }

    proptest! {
        #[test]
        fn serialise_then_parse_is_identity(p in valid_params()) {
            let text = p.to_config_string();
            let back: ModelParams = parse_config(&text).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn invariant_violations_are_rejected(
            p in valid_params(),
            field in 0usize..9,
            bad in prop_oneof![-1e3f64..-1e-9, Just(f64::NAN), Just(f64::INFINITY)],
        ) {
            let mut q = p;
            match field {
                0 => q.charging_energy = bad,
                1 => q.exchange_splitting = bad,
                2 => q.bias = bad,
                3 => q.tunneling = bad,
                4 => q.tunneling_conditional = bad,
                5 => q.gamma_a0 = bad,
                6 => q.gamma_b0 = bad,
                7 => q.temperature = bad,
                _ => q.alpha = bad,
            }
            // Infinite bias is the one value that could satisfy the inequality; it is
            // still rejected as non-finite.
            prop_assert!(parse_config::<f64>(&q.to_config_string()).is_err());
        }

        #[test]
        fn bias_below_threshold_is_rejected(p in valid_params(), frac in 0.0f64..=1.0) {
            let mut q = p;
            q.bias = q.high_bias_threshold() * frac;
            prop_assert!(parse_config::<f64>(&q.to_config_string()).is_err());
        }
    }
}
