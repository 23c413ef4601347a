use std::fmt::Write;

use crate::run::BenchReport;

/// Plain-text rendering of a report with aligned columns.
pub fn render_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "backend: {}  seed: {}  host: {} cores ({}/{})",
        report.backend.kind,
        report.seed.map_or("none".into(), |s| s.to_string()),
        report.host.cores,
        report.host.os,
        report.host.arch
    );
    if let Some(w) = &report.workload {
        let s = &w.stats;
        let _ = writeln!(
            out,
            "workload: {}  n={}  min={}  max={}  mean={:.3}  sd={:.3}",
            w.name, s.count, s.min, s.max, s.mean, s.stddev
        );
    }
    if let Some(m) = &report.microbench {
        let _ = writeln!(out, "\n{:<16} {:>14} {:>12}", "operation", "median (ns)", "vs enc");
        for (name, ns, rel) in [
            ("enc", m.enc_ns, 1.0),
            ("eval_add", m.add_ns, m.add_relative),
            ("eval_mul_plain", m.mul_plain_ns, m.mul_plain_relative),
        ] {
            let _ = writeln!(out, "{name:<16} {ns:>14.0} {rel:>11.1}x");
        }
    }
    if !report.strategies.is_empty() {
        let _ = writeln!(
            out,
            "\n{:<10} {:>12} {:>12} {:>10} {:>10} {:>10} {:>8} {:>8} {:>9}",
            "strategy", "offline ms", "online ms", "us/value", "adds", "const_muls", "encs", "stalls", "verified"
        );
        let count = report.workload.as_ref().map_or(1, |w| w.stats.count.max(1));
        for r in &report.strategies {
            let _ = writeln!(
                out,
                "{:<10} {:>12.1} {:>12.1} {:>10.1} {:>10} {:>10} {:>8} {:>8} {:>9}",
                r.strategy.to_string(),
                r.offline_ms,
                r.online_ms,
                r.online_ms * 1e3 / count as f64,
                r.counters.adds,
                r.counters.const_muls,
                r.counters.encs,
                r.stalls,
                r.verified
            );
        }
    }
    if !report.speedups.is_empty() {
        let _ = writeln!(out);
        for s in &report.speedups {
            let _ = writeln!(out, "speedup {} over {}: {:.2}x", s.strategy, s.baseline, s.ratio);
        }
    }
    if let Some(p) = &report.parallel {
        let _ = writeln!(
            out,
            "\n{:<8} {:>12} {:>9}   (pool of {} ciphertexts)",
            "workers", "init ms", "speedup", p.pool_size
        );
        for pt in &p.points {
            let _ = writeln!(out, "{:<8} {:>12.1} {:>8.2}x", pt.workers, pt.median_ms, pt.speedup);
        }
        let _ = writeln!(out, "identical contents across worker counts: {}", p.identical_contents);
    }
    out
}
