//! Command-line front end: analytic simulations, regression reports
//! against the embedded reference tables, the deterministic layer demo and
//! the invariant battery.

mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use freqformer::checks::run_checks;
use freqformer::layer::{
    approximation_report, branch_interactions, composed_saturation_forward,
    dense_reference_forward, exchange_pair_count, forward, layer_load_balance_loss, routing,
    LayerConfig, LayerWeights,
};
use freqformer::perf::{
    arithmetic_intensity, duration_to_tokens, flops_dense, flops_freq_attention, flops_freq_total,
    flops_transform, roofline_time, tokens_per_second, traffic_dense, traffic_freq, CostConfig,
    Execution, HardwareProfile, RooflineMode,
};
use freqformer::report::{format_cell, table_report, CellKind};
use freqformer::rng::seeded_tensor;
use freqformer::spectral::SpectralPlan;
use freqformer::tables::ReferenceTables;
use freqformer::{bands, Error};

/// Desk-scale cap on the demo's token count.
const DEMO_TOKEN_CAP: usize = 4096;

#[derive(Parser)]
#[command(name = "freqformer")]
#[command(about = "Frequency-heterogeneous attention reference and analytic performance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimKind {
    /// Per-layer FLOPs (dense vs heterogeneous, with transform)
    Flops,
    /// Score/KV traffic in bytes
    Traffic,
    /// Arithmetic intensity in FLOPs/byte
    Intensity,
    /// Roofline wall-clock and tokens/s on one profile
    Throughput,
    /// Fused vs separate branch execution
    Fusion,
    /// Wall-clock vs video duration
    Duration,
}

#[derive(Subcommand)]
enum Command {
    /// Run an analytic simulation and emit CSV (plus an optional SVG plot)
    Sim {
        #[arg(value_enum)]
        kind: SimKind,
        /// Sequence lengths, comma separated
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
        /// Video durations in seconds, comma separated (duration sims)
        #[arg(long, value_delimiter = ',')]
        duration: Vec<f64>,
        /// Builtin profile name (h100, h20) or a JSON profile path
        #[arg(long, default_value = "h100")]
        profile: String,
        /// Wall-clock composition: table-match or roofline-max
        #[arg(long, default_value = "table-match")]
        mode: String,
        /// Override the transform log2 offset (0 honors the plain model,
        /// 4 matches the reference transform column)
        #[arg(long)]
        transform_offset: Option<u32>,
        /// Model separate (unfused) branch execution
        #[arg(long)]
        separate: bool,
        /// Cost-config JSON overriding the built-in defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Recompute one reference table and report per-cell deviations
    Compare {
        /// Table id, 1 through 7
        #[arg(long)]
        table: u8,
        #[arg(long, default_value = "table-match")]
        mode: String,
        #[arg(long)]
        transform_offset: Option<u32>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the layer against its dense reference on seeded input
    Demo {
        #[arg(long, default_value_t = 8)]
        t: usize,
        #[arg(long, default_value_t = 8)]
        h: usize,
        #[arg(long, default_value_t = 8)]
        w: usize,
        #[arg(long, default_value_t = 128)]
        d_model: usize,
        #[arg(long, default_value_t = 2)]
        heads: usize,
        #[arg(long, default_value_t = 500)]
        timestep: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Saturate the band operators (full window, full sparse degree,
        /// no compression, no exchange) and check the composed pipeline
        #[arg(long)]
        saturate: bool,
        /// Load-balance regularizer weight
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Write the CSV summary here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full invariant battery; nonzero exit on any failure
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Argument(_) | Error::Config(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Sim {
            kind,
            n,
            duration,
            profile,
            mode,
            transform_offset,
            separate,
            config,
            out,
            svg,
        } => {
            let cfg = load_cost_config(config.as_deref(), transform_offset)?;
            let mode = RooflineMode::parse(&mode)?;
            let profile = HardwareProfile::resolve(&profile)?;
            cmd_sim(
                kind, &n, &duration, &profile, mode, separate, &cfg, out.as_deref(),
                svg.as_deref(),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            table,
            mode,
            transform_offset,
            config,
            out,
        } => {
            let cfg = load_cost_config(config.as_deref(), transform_offset)?;
            let mode = RooflineMode::parse(&mode)?;
            cmd_compare(table, &cfg, mode, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo {
            t,
            h,
            w,
            d_model,
            heads,
            timestep,
            seed,
            saturate,
            lambda,
            out,
        } => {
            cmd_demo(t, h, w, d_model, heads, timestep, seed, saturate, lambda, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => Ok(cmd_check()),
    }
}

/// Built-in defaults, overridden by the JSON config file, overridden by
/// explicit flags.
fn load_cost_config(path: Option<&Path>, transform_offset: Option<u32>) -> Result<CostConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)?
        }
        None => CostConfig::default(),
    };
    if let Some(offset) = transform_offset {
        cfg.transform_log_offset = offset;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn fmt_dev(dev: Option<f64>) -> String {
    dev.map(|d| format!("{d:.4}")).unwrap_or_default()
}

fn deviation(computed: f64, reference: Option<f64>) -> Option<f64> {
    reference.map(|r| 100.0 * (r - computed) / computed)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sim(
    kind: SimKind,
    n_list: &[u64],
    durations: &[f64],
    profile: &HardwareProfile,
    mode: RooflineMode,
    separate: bool,
    cfg: &CostConfig,
    out: Option<&Path>,
    svg_out: Option<&Path>,
) -> Result<(), Error> {
    let tables = ReferenceTables::builtin();
    let needs_n = !matches!(kind, SimKind::Duration);
    if needs_n && n_list.is_empty() {
        return Err(Error::Argument(
            "sim requires at least one sequence length via --n".into(),
        ));
    }
    if !needs_n && durations.is_empty() {
        return Err(Error::Argument(
            "sim duration requires at least one value via --duration".into(),
        ));
    }
    if let Some(&bad) = n_list.iter().find(|&&n| n == 0) {
        return Err(Error::Argument(format!("invalid sequence length {bad}")));
    }
    if let Some(&bad) = durations.iter().find(|&&d| d <= 0.0) {
        return Err(Error::Argument(format!("invalid duration {bad}")));
    }

    let mut csv = String::new();
    let mut series: Vec<svg::Series> = Vec::new();
    let mut svg_doc: Option<String> = None;

    match kind {
        SimKind::Flops => {
            csv.push_str("n,dense_flops,freq_attention_flops,transform_flops,freq_total_flops,reduction_vs_dense,deviation_pct\n");
            let mut dense_pts = Vec::new();
            let mut freq_pts = Vec::new();
            for &n in n_list {
                let dense = flops_dense(n, cfg);
                let attn = flops_freq_attention(n, cfg);
                let transform = flops_transform(n, cfg)?;
                let total = attn as f64 + transform;
                let dev = deviation(total, tables.flops_row(n).map(|r| r.total_flops as f64));
                writeln!(
                    csv,
                    "{n},{dense},{attn},{},{},{:.2},{}",
                    format_cell(transform, CellKind::Integer),
                    format_cell(total, CellKind::Integer),
                    dense as f64 / total,
                    fmt_dev(dev)
                )
                .unwrap();
                dense_pts.push((n as f64, dense as f64));
                freq_pts.push((n as f64, total));
            }
            series.push(svg::Series { name: "dense attention FLOPs".into(), points: dense_pts });
            series.push(svg::Series { name: "heterogeneous total FLOPs".into(), points: freq_pts });
            if svg_out.is_some() {
                svg_doc = Some(svg::log_log_chart(
                    "Per-layer FLOPs vs sequence length",
                    "sequence length",
                    "FLOPs",
                    &series,
                ));
            }
        }
        SimKind::Traffic => {
            csv.push_str("n,dense_bytes,dense_gib,freq_bytes,freq_gib,reduction,deviation_pct\n");
            let mut dense_pts = Vec::new();
            let mut freq_pts = Vec::new();
            const GIB: f64 = 1024.0 * 1024.0 * 1024.0;
            for &n in n_list {
                let dense = traffic_dense(n, cfg);
                let freq = traffic_freq(n, cfg);
                let dev = deviation(freq as f64, tables.traffic_row(n).map(|r| r.freq_bytes as f64));
                writeln!(
                    csv,
                    "{n},{dense},{:.4},{freq},{:.4},{:.2},{}",
                    dense as f64 / GIB,
                    freq as f64 / GIB,
                    dense as f64 / freq as f64,
                    fmt_dev(dev)
                )
                .unwrap();
                dense_pts.push((n as f64, dense as f64));
                freq_pts.push((n as f64, freq as f64));
            }
            series.push(svg::Series { name: "dense score traffic (bytes)".into(), points: dense_pts });
            series.push(svg::Series { name: "heterogeneous traffic (bytes)".into(), points: freq_pts });
            if svg_out.is_some() {
                svg_doc = Some(svg::log_log_chart(
                    "Score/KV traffic vs sequence length",
                    "sequence length",
                    "bytes",
                    &series,
                ));
            }
        }
        SimKind::Intensity => {
            csv.push_str("n,dense_intensity,attention_intensity,total_intensity,deviation_pct\n");
            let mut points = Vec::new();
            for &n in n_list {
                let dense =
                    arithmetic_intensity(flops_dense(n, cfg) as f64, traffic_dense(n, cfg) as f64)?;
                let attn = arithmetic_intensity(
                    flops_freq_attention(n, cfg) as f64,
                    traffic_freq(n, cfg) as f64,
                )?;
                let total =
                    arithmetic_intensity(flops_freq_total(n, cfg)?, traffic_freq(n, cfg) as f64)?;
                let dev = deviation(total, tables.intensity_row(n).map(|r| r.total));
                writeln!(csv, "{n},{dense:.4},{attn:.4},{total:.4},{}", fmt_dev(dev)).unwrap();
                points.push((format!("n={n}"), total));
            }
            if svg_out.is_some() {
                svg_doc = Some(svg::roofline_chart(
                    &format!("Roofline on {} (effective rates)", profile.name),
                    profile.effective_compute(),
                    profile.effective_bandwidth(),
                    &points,
                ));
            }
        }
        SimKind::Throughput => {
            csv.push_str("n,dense_ms,dense_tokens_per_s,freq_ms,freq_tokens_per_s,speedup,deviation_pct\n");
            let exec = if separate { Execution::Separate } else { Execution::Fused };
            let mut dense_pts = Vec::new();
            let mut freq_pts = Vec::new();
            for &n in n_list {
                let dense_t = roofline_time(
                    flops_dense(n, cfg) as f64,
                    traffic_dense(n, cfg) as f64,
                    profile,
                    mode,
                    Execution::Fused,
                );
                let freq_t = roofline_time(
                    flops_freq_total(n, cfg)?,
                    traffic_freq(n, cfg) as f64,
                    profile,
                    mode,
                    exec,
                );
                let anchor = if separate {
                    tables.fusion_row(n).map(|r| r.separate_ms)
                } else {
                    tables.throughput_row(&profile.name, n).map(|r| r.freq_ms)
                };
                let dev = deviation(freq_t * 1e3, anchor);
                writeln!(
                    csv,
                    "{n},{:.4},{:.0},{:.4},{:.0},{:.2},{}",
                    dense_t * 1e3,
                    tokens_per_second(n, dense_t),
                    freq_t * 1e3,
                    tokens_per_second(n, freq_t),
                    dense_t / freq_t,
                    fmt_dev(dev)
                )
                .unwrap();
                dense_pts.push((n as f64, dense_t * 1e3));
                freq_pts.push((n as f64, freq_t * 1e3));
            }
            series.push(svg::Series { name: "dense time (ms)".into(), points: dense_pts });
            series.push(svg::Series { name: "heterogeneous time (ms)".into(), points: freq_pts });
            if svg_out.is_some() {
                svg_doc = Some(svg::log_log_chart(
                    &format!("Per-layer wall-clock on {}", profile.name),
                    "sequence length",
                    "time (ms)",
                    &series,
                ));
            }
        }
        SimKind::Fusion => {
            csv.push_str("n,fused_ms,separate_ms,fused_tokens_per_s,separate_tokens_per_s,fused_speedup,deviation_pct\n");
            let mut fused_pts = Vec::new();
            let mut separate_pts = Vec::new();
            for &n in n_list {
                let flops = flops_freq_total(n, cfg)?;
                let bytes = traffic_freq(n, cfg) as f64;
                let fused = roofline_time(flops, bytes, profile, mode, Execution::Fused);
                let sep = roofline_time(flops, bytes, profile, mode, Execution::Separate);
                let anchor = if profile.name == "h100" {
                    tables.fusion_row(n).map(|r| r.separate_ms)
                } else {
                    None
                };
                let dev = deviation(sep * 1e3, anchor);
                writeln!(
                    csv,
                    "{n},{:.4},{:.4},{:.0},{:.0},{:.2},{}",
                    fused * 1e3,
                    sep * 1e3,
                    tokens_per_second(n, fused),
                    tokens_per_second(n, sep),
                    sep / fused,
                    fmt_dev(dev)
                )
                .unwrap();
                fused_pts.push((n as f64, fused * 1e3));
                separate_pts.push((n as f64, sep * 1e3));
            }
            series.push(svg::Series { name: "fused time (ms)".into(), points: fused_pts });
            series.push(svg::Series { name: "separate time (ms)".into(), points: separate_pts });
            if svg_out.is_some() {
                svg_doc = Some(svg::log_log_chart(
                    &format!("Fused vs separate execution on {}", profile.name),
                    "sequence length",
                    "time (ms)",
                    &series,
                ));
            }
        }
        SimKind::Duration => {
            csv.push_str("duration_s,n,dense_ms,freq_ms,speedup,deviation_pct\n");
            let exec = if separate { Execution::Separate } else { Execution::Fused };
            let mut dense_pts = Vec::new();
            let mut freq_pts = Vec::new();
            for &secs in durations {
                let n = duration_to_tokens(secs);
                let dense_t = roofline_time(
                    flops_dense(n, cfg) as f64,
                    traffic_dense(n, cfg) as f64,
                    profile,
                    mode,
                    Execution::Fused,
                );
                let freq_t = roofline_time(
                    flops_freq_total(n, cfg)?,
                    traffic_freq(n, cfg) as f64,
                    profile,
                    mode,
                    exec,
                );
                let anchor = if profile.name == "h100" && !separate && secs.fract() == 0.0 {
                    tables.duration_row(secs as u64).map(|r| r.freq_ms)
                } else {
                    None
                };
                let dev = deviation(freq_t * 1e3, anchor);
                let secs_label = if secs.fract() == 0.0 {
                    format!("{secs:.0}")
                } else {
                    format!("{secs}")
                };
                writeln!(
                    csv,
                    "{secs_label},{n},{:.4},{:.4},{:.2},{}",
                    dense_t * 1e3,
                    freq_t * 1e3,
                    dense_t / freq_t,
                    fmt_dev(dev)
                )
                .unwrap();
                dense_pts.push((secs, dense_t * 1e3));
                freq_pts.push((secs, freq_t * 1e3));
            }
            series.push(svg::Series { name: "dense time (ms)".into(), points: dense_pts });
            series.push(svg::Series { name: "heterogeneous time (ms)".into(), points: freq_pts });
            if svg_out.is_some() {
                svg_doc = Some(svg::log_log_chart(
                    &format!("Per-layer wall-clock vs video duration on {}", profile.name),
                    "duration (s)",
                    "time (ms)",
                    &series,
                ));
            }
        }
    }

    write_output(out, &csv)?;
    if let (Some(path), Some(doc)) = (svg_out, svg_doc) {
        std::fs::write(path, doc)?;
    }
    Ok(())
}

fn cmd_compare(
    table: u8,
    cfg: &CostConfig,
    mode: RooflineMode,
    out: Option<&Path>,
) -> Result<(), Error> {
    let tables = ReferenceTables::builtin();
    let report = table_report(table, cfg, mode, &tables)?;
    let mut csv = String::new();
    writeln!(csv, "{},column,computed,reference,deviation_pct", report.key_name).unwrap();
    for cell in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{:.4}",
            cell.key,
            cell.column,
            cell.format(cell.computed),
            cell.format(cell.reference),
            cell.deviation_pct()
        )
        .unwrap();
    }
    write_output(out, &csv)?;
    // deviations are findings, not failures; notes go to stderr so the CSV
    // stays clean
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo(
    t: usize,
    h: usize,
    w: usize,
    d_model: usize,
    heads: usize,
    timestep: u64,
    seed: u64,
    saturate: bool,
    lambda: f64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let tokens = t * h * w;
    if tokens > DEMO_TOKEN_CAP {
        return Err(Error::Argument(format!(
            "demo is desk-scale only: {t}x{h}x{w} = {tokens} tokens exceeds the cap of {DEMO_TOKEN_CAP}"
        )));
    }
    let mut cfg = LayerConfig::new(t, h, w, d_model, heads, seed);
    if saturate {
        cfg = cfg.saturated();
    }
    cfg.validate()?;
    let weights = LayerWeights::seeded(&cfg);
    let x = seeded_tensor((t, h, w, d_model), seed.wrapping_add(1000), 1.0);

    let decision = routing(&cfg, &weights, &x, timestep)?;
    let y_freq = forward(&cfg, &weights, &x, timestep)?;
    let y_full = dense_reference_forward(&cfg, &weights, &x)?;
    let plan = SpectralPlan::new(t, h, w)?;
    let part = bands::build_partition(t, h, w, &cfg.band)?;
    let report = approximation_report(&y_full, &y_freq, &plan, &part)?;
    let branches = branch_interactions(&cfg)?;
    let exchange_pairs = exchange_pair_count(&part, cfg.summary_tokens);
    let lb_loss = layer_load_balance_loss(&cfg, &weights, &x, timestep, lambda)?;
    let saturation_diff = if saturate {
        let composed = composed_saturation_forward(&cfg, &weights, &x, timestep)?;
        Some(y_freq.max_abs_diff(&composed))
    } else {
        None
    };

    println!("layer demo: ({t}, {h}, {w}) x {d_model} channels, {heads} heads, timestep {timestep}, seed {seed}");
    println!(
        "  bands: low {} (compressed {}), mid {}, high {}",
        part.n_low(),
        part.n_low_compressed(),
        part.n_mid(),
        part.n_high()
    );
    println!(
        "  routing: pi = ({:.6}, {:.6}, {:.6}), heads = ({}, {}, {})",
        decision.pi[0], decision.pi[1], decision.pi[2],
        decision.heads.0, decision.heads.1, decision.heads.2
    );
    println!(
        "  interactions: low {} + mid {} + high {} = {} pairs; exchange {} pairs",
        branches.low,
        branches.mid,
        branches.high,
        branches.total(),
        exchange_pairs
    );
    println!(
        "  approximation vs dense reference: total {:.6e} (low {:.6e}, mid {:.6e}, high {:.6e})",
        report.total_error, report.eps_low, report.eps_mid, report.eps_high
    );
    println!("  load-balance loss (lambda {lambda}): {lb_loss:.6e}");
    if let Some(diff) = saturation_diff {
        println!("  saturation self-check vs composed pipeline: max abs diff {diff:.6e}");
    }

    let mut csv = String::new();
    csv.push_str("t,h,w,d_model,n_heads,timestep,seed,saturate,pi_low,pi_mid,pi_high,heads_low,heads_mid,heads_high,pairs_low,pairs_mid,pairs_high,exchange_pairs,total_error,eps_low,eps_mid,eps_high,lb_loss,saturation_max_abs_diff\n");
    writeln!(
        csv,
        "{t},{h},{w},{d_model},{heads},{timestep},{seed},{saturate},{:.6},{:.6},{:.6},{},{},{},{},{},{},{exchange_pairs},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
        decision.pi[0],
        decision.pi[1],
        decision.pi[2],
        decision.heads.0,
        decision.heads.1,
        decision.heads.2,
        branches.low,
        branches.mid,
        branches.high,
        report.total_error,
        report.eps_low,
        report.eps_mid,
        report.eps_high,
        lb_loss,
        saturation_diff.map(|d| format!("{d:.6e}")).unwrap_or_default()
    )
    .unwrap();
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
    }
    Ok(())
}

fn cmd_check() -> ExitCode {
    let summary = run_checks(&ReferenceTables::builtin());
    for (name, result) in &summary.results {
        match result {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => println!("FAIL {name}: {msg}"),
        }
    }
    println!(
        "properties_passed={} properties_failed={}",
        summary.passed(),
        summary.failed()
    );
    if summary.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
