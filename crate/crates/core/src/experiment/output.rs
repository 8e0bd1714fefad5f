use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentError, SweepRow};

pub const CSV_HEADER: &str = "scenario_id,strategy,a_rule,c_rule,step_mode,mu_max,bias_sq_norm,limit_bias_sq_norm,assumption3_satisfied,spectral_radius,iterations,converged";

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with LF endings; `limit_bias_sq_norm` is `N` times the per-node
/// limit so that it compares directly with the stacked `bias_sq_norm`.
pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.strategy.name(),
            r.a_rule.name(),
            r.c_rule.name(),
            r.step_mode.name(),
            real(r.mu_max),
            real(r.bias_sq_norm),
            real(r.limit_bias_sq_norm),
            r.assumption3_satisfied,
            real(r.spectral_radius),
            r.iterations,
            r.converged
        );
    }
    out
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<(), ExperimentError> {
    write_file(path, &to_csv_string(rows))
}

/// Gnuplot script: one inline data block per scenario, squared bias in dB
/// against `μ_max` on a log axis, plus a dashed line at the limit wherever
/// the limit is nonzero.
pub fn plot_script_string(rows: &[SweepRow]) -> String {
    let mut groups: Vec<Vec<&SweepRow>> = Vec::new();
    for r in rows {
        match groups.last_mut() {
            Some(g) if g[0].scenario_id == r.scenario_id => g.push(r),
            _ => groups.push(vec![r]),
        }
    }

    let mut s = String::new();
    s.push_str("set logscale x\n");
    s.push_str("set format x \"10^{%L}\"\n");
    s.push_str("set xlabel \"mu_max\"\n");
    s.push_str("set ylabel \"squared bias norm (dB)\"\n");
    s.push_str("set key bottom right\n");
    s.push_str("set grid\n");

    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
        (a.min(r.mu_max), b.max(r.mu_max))
    });
    if groups.is_empty() {
        s.push_str("set xrange [1e-5:1e-2]\n");
        s.push_str("set yrange [-100:0]\n");
        s.push_str("plot NaN notitle\n");
        return s;
    }
    let _ = writeln!(s, "set xrange [{}:{}]", real(lo), real(hi));

    for g in &groups {
        let _ = writeln!(s, "$scenario{} << EOD", g[0].scenario_id);
        for r in g {
            let _ = writeln!(s, "{} {}", real(r.mu_max), real(r.bias_sq_norm));
        }
        s.push_str("EOD\n");
    }

    let mut terms = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        let r = g[0];
        let label = format!(
            "{} A={} C={} {}",
            r.strategy.name(),
            r.a_rule.name(),
            r.c_rule.name(),
            r.step_mode.name()
        )
        .replace('_', "-");
        let color = i + 1;
        terms.push(format!(
            "$scenario{} using 1:(10*log10($2)) with linespoints lc {color} pt 7 title \"{label}\"",
            r.scenario_id
        ));
        if !r.assumption3_satisfied && r.limit_bias_sq_norm > 0.0 {
            terms.push(format!(
                "10*log10({}) with lines lc {color} dt 2 title \"{label} (limit)\"",
                real(r.limit_bias_sq_norm)
            ));
        }
    }
    let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
    s
}

pub fn emit_plot_script(rows: &[SweepRow], path: &Path) -> Result<(), ExperimentError> {
    write_file(path, &plot_script_string(rows))
}

fn write_file(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}
