use std::fmt::Write;

use crate::pipeline::RunStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Kv,
}

/// One benchmark run under one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportEntry {
    pub config: String,
    pub benchmark: String,
    pub cycles: u64,
    pub retired: u64,
    pub hits: u64,
    pub misses: u64,
}

impl ReportEntry {
    pub fn new(config: &str, benchmark: &str, stats: &RunStats) -> Self {
        ReportEntry {
            config: config.to_string(),
            benchmark: benchmark.to_string(),
            cycles: stats.cycles,
            retired: stats.retired,
            hits: stats.pred_hits,
            misses: stats.pred_misses,
        }
    }

    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.retired as f64 / self.cycles as f64
        }
    }

    pub fn hit_rate(&self) -> Option<f64> {
        let n = self.hits + self.misses;
        (n > 0).then(|| self.hits as f64 / n as f64)
    }
}

/// Per-configuration means over that configuration's entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Average {
    pub config: String,
    pub ipc: f64,
    /// Mean over the entries that have a hit rate.
    pub hit_rate: Option<f64>,
}

/// Groups entries by configuration in first-seen order and averages each group.
pub fn averages(entries: &[ReportEntry]) -> Vec<Average> {
    let mut configs: Vec<&str> = Vec::new();
    for e in entries {
        if !configs.contains(&e.config.as_str()) {
            configs.push(&e.config);
        }
    }
    configs
        .into_iter()
        .map(|c| {
            let group: Vec<&ReportEntry> = entries.iter().filter(|e| e.config == c).collect();
            let ipc = group.iter().map(|e| e.ipc()).sum::<f64>() / group.len() as f64;
            let rates: Vec<f64> = group.iter().filter_map(|e| e.hit_rate()).collect();
            let hit_rate = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
            Average { config: c.to_string(), ipc, hit_rate }
        })
        .collect()
}

fn pct(r: Option<f64>) -> String {
    r.map_or_else(|| "N/A".to_string(), |r| format!("{:.2}%", r * 100.0))
}

/// Renders entries as an aligned table with an average row per configuration,
/// or as `key=value` lines.
///
/// # Panics
/// If `entries` is empty.
pub fn emit_report(entries: &[ReportEntry], format: ReportFormat) -> String {
    assert!(!entries.is_empty(), "report needs at least one entry");
    let avgs = averages(entries);
    let mut out = String::new();
    match format {
        ReportFormat::Text => {
            let cw = entries.iter().map(|e| e.config.len()).max().unwrap_or(0).max(6);
            let bw = entries.iter().map(|e| e.benchmark.len()).max().unwrap_or(0).max(9);
            out.push_str("# retired counts include the halting instruction\n");
            let _ = writeln!(
                out,
                "{:<cw$}  {:<bw$}  {:>6}  {:>9}  {:>10}  {:>8}  {:>10}  {:>10}",
                "config", "benchmark", "IPC", "pred hit", "pred miss", "hit rate", "cycles", "retired"
            );
            for a in &avgs {
                for e in entries.iter().filter(|e| e.config == a.config) {
                    let _ = writeln!(
                        out,
                        "{:<cw$}  {:<bw$}  {:>6.3}  {:>9}  {:>10}  {:>8}  {:>10}  {:>10}",
                        e.config,
                        e.benchmark,
                        e.ipc(),
                        e.hits,
                        e.misses,
                        pct(e.hit_rate()),
                        e.cycles,
                        e.retired
                    );
                }
                let _ = writeln!(
                    out,
                    "{:<cw$}  {:<bw$}  {:>6.3}  {:>9}  {:>10}  {:>8}  {:>10}  {:>10}",
                    a.config,
                    "average",
                    a.ipc,
                    "",
                    "",
                    pct(a.hit_rate),
                    "",
                    ""
                );
            }
            out = out.lines().map(|l| format!("{}\n", l.trim_end())).collect();
        }
        ReportFormat::Kv => {
            for e in entries {
                let k = format!("{}.{}", e.config, e.benchmark);
                let _ = writeln!(out, "{k}.ipc={:.6}", e.ipc());
                let _ = writeln!(out, "{k}.pred_hits={}", e.hits);
                let _ = writeln!(out, "{k}.pred_misses={}", e.misses);
                let _ = writeln!(
                    out,
                    "{k}.hit_rate={}",
                    e.hit_rate().map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"))
                );
                let _ = writeln!(out, "{k}.cycles={}", e.cycles);
                let _ = writeln!(out, "{k}.retired={}", e.retired);
            }
            for a in &avgs {
                let _ = writeln!(out, "{}.average.ipc={:.6}", a.config, a.ipc);
                let _ = writeln!(
                    out,
                    "{}.average.hit_rate={}",
                    a.config,
                    a.hit_rate.map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"))
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(config: &str, bench: &str, cycles: u64, retired: u64, hits: u64, misses: u64) -> ReportEntry {
        ReportEntry {
            config: config.into(),
            benchmark: bench.into(),
            cycles,
            retired,
            hits,
            misses,
        }
    }

    #[test]
    fn single_entry_average_equals_entry() {
        let e = entry("rvp-simple", "a", 100, 80, 9, 1);
        let a = &averages(std::slice::from_ref(&e))[0];
        assert_eq!(a.ipc, e.ipc());
        assert_eq!(a.hit_rate, e.hit_rate());
    }

    #[test]
    fn two_entries_arithmetic_mean() {
        let es = [entry("c", "a", 1000, 946, 1, 1), entry("c", "b", 1000, 828, 0, 0)];
        let a = &averages(&es)[0];
        assert!((a.ipc - 0.887).abs() < 1e-12);
        // Only the first entry has a hit rate.
        assert_eq!(a.hit_rate, Some(0.5));
    }

    #[test]
    fn zero_predictions_show_na() {
        let text = emit_report(&[entry("nobp", "x", 10, 5, 0, 0)], ReportFormat::Text);
        assert!(text.contains("N/A"));
        let kv = emit_report(&[entry("nobp", "x", 10, 5, 0, 0)], ReportFormat::Kv);
        assert!(kv.contains("nobp.x.hit_rate=NA"));
    }

    #[test]
    fn groups_by_config() {
        let es = [entry("p", "a", 10, 5, 1, 0), entry("q", "a", 10, 8, 1, 1), entry("p", "b", 10, 7, 0, 1)];
        let avgs = averages(&es);
        assert_eq!(avgs.len(), 2);
        assert!((avgs[0].ipc - 0.6).abs() < 1e-12);
        assert!((avgs[1].ipc - 0.8).abs() < 1e-12);
    }
}
