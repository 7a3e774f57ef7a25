use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::datapath::Impl;
use crate::memsys::DEFAULT_MEM_BYTES;
use crate::pipeline::{LoadUseDetect, PipelineConfig};
use crate::predictor::PredictorMode;

pub const DEFAULT_MAX_CYCLES: u64 = 50_000_000;

/// The four processor variants plus a baseline without prediction.
pub const PRESETS: [&str; 5] = ["rvp-simple", "rvp-optalu", "rvp-optif", "rvp-optall", "nobp"];

/// The four processor variants alone.
pub const PROCESSOR_PRESETS: [&str; 4] = ["rvp-simple", "rvp-optalu", "rvp-optif", "rvp-optall"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimConfig {
    pub predictor: PredictorMode,
    pub alu: Impl,
    pub extend: Impl,
    pub load_use: LoadUseDetect,
    pub imem_bytes: usize,
    pub dmem_bytes: usize,
    pub max_cycles: u64,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::preset("rvp-simple").expect("builtin preset")
    }
}

impl SimConfig {
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        use Impl::{Mux, OneHot};
        use PredictorMode::{None, Pipelined, Single};
        let (predictor, alu, extend, load_use) = match name {
            "rvp-simple" => (Single, Mux, Mux, LoadUseDetect::Decode),
            "rvp-optalu" => (Single, OneHot, OneHot, LoadUseDetect::Decode),
            "rvp-optif" => (Pipelined, Mux, Mux, LoadUseDetect::Fetch),
            "rvp-optall" => (Pipelined, OneHot, OneHot, LoadUseDetect::Fetch),
            "nobp" => (None, Mux, Mux, LoadUseDetect::Decode),
            _ => return Err(ConfigError::UnknownPreset(name.to_string())),
        };
        Ok(SimConfig {
            predictor,
            alu,
            extend,
            load_use,
            imem_bytes: DEFAULT_MEM_BYTES,
            dmem_bytes: DEFAULT_MEM_BYTES,
            max_cycles: DEFAULT_MAX_CYCLES,
            trace: false,
        })
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { predictor: self.predictor, alu: self.alu, extend: self.extend, load_use: self.load_use }
    }

    /// The preset with the same pipeline configuration, if any.
    pub fn preset_name(&self) -> Option<&'static str> {
        PRESETS
            .iter()
            .copied()
            .find(|p| SimConfig::preset(p).map(|c| c.pipeline()) == Ok(self.pipeline()))
    }

    /// Preset name when there is one, otherwise the flag string.
    pub fn label(&self) -> String {
        match self.preset_name() {
            Some(p) => p.to_string(),
            None => format!(
                "predictor={},alu={},extend={},load_use={}",
                self.predictor.name(),
                impl_name(self.alu),
                impl_name(self.extend),
                load_use_name(self.load_use)
            ),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue { key: key.to_string(), value: value.to_string() };
        match key {
            "predictor" => {
                self.predictor = match value {
                    "none" => PredictorMode::None,
                    "single" => PredictorMode::Single,
                    "pipelined" => PredictorMode::Pipelined,
                    _ => return Err(bad()),
                }
            }
            "alu" => self.alu = parse_impl(value).ok_or_else(bad)?,
            "extend" => self.extend = parse_impl(value).ok_or_else(bad)?,
            "load_use" => {
                self.load_use = match value {
                    "decode" => LoadUseDetect::Decode,
                    "fetch" => LoadUseDetect::Fetch,
                    _ => return Err(bad()),
                }
            }
            "imem" => self.imem_bytes = parse_size(value).ok_or_else(bad)?,
            "dmem" => self.dmem_bytes = parse_size(value).ok_or_else(bad)?,
            "max_cycles" => {
                self.max_cycles = value.parse().ok().filter(|&n| n > 0).ok_or_else(bad)?
            }
            "trace" => {
                self.trace = match value {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}

fn parse_impl(s: &str) -> Option<Impl> {
    match s {
        "mux" => Some(Impl::Mux),
        "onehot" => Some(Impl::OneHot),
        _ => None,
    }
}

fn impl_name(i: Impl) -> &'static str {
    match i {
        Impl::Mux => "mux",
        Impl::OneHot => "onehot",
    }
}

fn load_use_name(l: LoadUseDetect) -> &'static str {
    match l {
        LoadUseDetect::Decode => "decode",
        LoadUseDetect::Fetch => "fetch",
    }
}

/// Byte count with an optional `k`/`K` suffix, power of two.
fn parse_size(s: &str) -> Option<usize> {
    let (digits, mult) = match s.strip_suffix(['k', 'K']) {
        Some(d) => (d, 1024),
        None => (s, 1),
    };
    let n = digits.parse::<usize>().ok()?.checked_mul(mult)?;
    (n >= 4 && n.is_power_of_two()).then_some(n)
}

/// A preset name, `key=value` pairs, or a preset followed by overrides,
/// all comma separated: `rvp-optif,max_cycles=1000`.
impl FromStr for SimConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cfg = SimConfig::default();
        for (i, tok) in s.split(',').map(str::trim).filter(|t| !t.is_empty()).enumerate() {
            match tok.split_once('=') {
                Some((k, v)) => cfg.set(k.trim(), v.trim())?,
                None if i == 0 => cfg = SimConfig::preset(tok)?,
                None => return Err(ConfigError::UnknownKey(tok.to_string())),
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "predictor={},alu={},extend={},load_use={},imem={},dmem={},max_cycles={},trace={}",
            self.predictor.name(),
            impl_name(self.alu),
            impl_name(self.extend),
            load_use_name(self.load_use),
            self.imem_bytes,
            self.dmem_bytes,
            self.max_cycles,
            if self.trace { "on" } else { "off" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_table() {
        let expect = [
            ("rvp-simple", PredictorMode::Single, Impl::Mux, Impl::Mux),
            ("rvp-optalu", PredictorMode::Single, Impl::OneHot, Impl::OneHot),
            ("rvp-optif", PredictorMode::Pipelined, Impl::Mux, Impl::Mux),
            ("rvp-optall", PredictorMode::Pipelined, Impl::OneHot, Impl::OneHot),
            ("nobp", PredictorMode::None, Impl::Mux, Impl::Mux),
        ];
        for (name, p, a, e) in expect {
            let c = SimConfig::preset(name).unwrap();
            assert_eq!((c.predictor, c.alu, c.extend), (p, a, e), "{name}");
            assert_eq!(c.preset_name(), Some(name));
            assert_eq!(c.label(), name);
        }
    }

    #[test]
    fn flags_and_overrides() {
        let c: SimConfig = "predictor=pipelined,alu=onehot,extend=onehot,load_use=fetch".parse().unwrap();
        assert_eq!(c.preset_name(), Some("rvp-optall"));
        let c: SimConfig = "rvp-optif, max_cycles=99, dmem=8k, trace=on".parse().unwrap();
        assert_eq!(c.predictor, PredictorMode::Pipelined);
        assert_eq!((c.max_cycles, c.dmem_bytes, c.trace), (99, 8192, true));
        let c: SimConfig = "predictor=none,load_use=fetch".parse().unwrap();
        assert_eq!(c.preset_name(), None);
        assert!(c.label().starts_with("predictor=none"));
    }

    #[test]
    fn display_round_trips() {
        for p in PRESETS {
            let c = SimConfig::preset(p).unwrap();
            assert_eq!(c.to_string().parse::<SimConfig>().unwrap(), c);
        }
    }

    #[test]
    fn errors() {
        assert_eq!("rvp-x".parse::<SimConfig>(), Err(ConfigError::UnknownPreset("rvp-x".into())));
        assert_eq!("colour=red".parse::<SimConfig>(), Err(ConfigError::UnknownKey("colour".into())));
        assert!(matches!("alu=fast".parse::<SimConfig>(), Err(ConfigError::BadValue { .. })));
        assert!("dmem=1000".parse::<SimConfig>().is_err());
        assert!("max_cycles=0".parse::<SimConfig>().is_err());
        assert!("rvp-simple,rvp-optif".parse::<SimConfig>().is_err());
    }
}
