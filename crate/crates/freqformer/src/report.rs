//! Regression reports: recompute every cell of the reference tables from
//! the analytic model and join against the embedded anchors with signed
//! deviations.

use crate::perf::{
    arithmetic_intensity, duration_to_tokens, flops_dense, flops_freq_attention, flops_freq_total,
    flops_transform, roofline_time, tokens_per_second, traffic_dense, traffic_freq, CostConfig,
    Execution, HardwareProfile, RooflineMode,
};
use crate::tables::{ReferenceTables, HEADLINE_FLOP_REDUCTION, HEADLINE_TRAFFIC_REDUCTION};
use crate::{Error, Result};

/// Fixed-format category of a report value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Exact count: printed verbatim with no decimals.
    Integer,
    /// Fixed-point with the given number of decimals.
    Fixed(u8),
}

/// One recomputed cell joined with its reference anchor.
#[derive(Debug, Clone)]
pub struct ReportCell {
    /// Sequence length, or duration in seconds for the duration table.
    pub key: u64,
    pub column: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub kind: CellKind,
}

impl ReportCell {
    /// Signed deviation of the reference anchor relative to the computed
    /// value, in percent: `100 * (reference - computed) / computed`.
    pub fn deviation_pct(&self) -> f64 {
        100.0 * (self.reference - self.computed) / self.computed
    }

    pub fn format(&self, value: f64) -> String {
        format_cell(value, self.kind)
    }
}

pub fn format_cell(value: f64, kind: CellKind) -> String {
    match kind {
        CellKind::Integer => format!("{value:.0}"),
        CellKind::Fixed(d) => format!("{value:.prec$}", prec = d as usize),
    }
}

/// A full per-table deviation report.
#[derive(Debug, Clone)]
pub struct TableReport {
    pub table_id: u8,
    /// Header name of the key column: `n` or `duration_s`.
    pub key_name: &'static str,
    pub cells: Vec<ReportCell>,
    /// Data inconsistencies worth surfacing alongside the numbers.
    pub notes: Vec<String>,
}

impl TableReport {
    pub fn cell(&self, key: u64, column: &str) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.key == key && c.column == column)
    }
}

const GIB: f64 = 1024.0 * 1024.0 * 1024.0;

/// Recompute one reference table from the analytic operations and join it
/// against the embedded anchors. Tables 4-7 are anchored to the builtin
/// h100/h20 profiles they were generated with; `mode` selects the
/// wall-clock composition.
pub fn table_report(
    table_id: u8,
    cfg: &CostConfig,
    mode: RooflineMode,
    tables: &ReferenceTables,
) -> Result<TableReport> {
    cfg.validate()?;
    match table_id {
        1 => report_flops(cfg, tables),
        2 => report_traffic(cfg, tables),
        3 => report_intensity(cfg, tables),
        4 => report_throughput(cfg, mode, tables, &HardwareProfile::h100()),
        5 => report_throughput(cfg, mode, tables, &HardwareProfile::h20()),
        6 => report_fusion(cfg, mode, tables),
        7 => report_duration(cfg, mode, tables),
        other => Err(Error::Argument(format!(
            "unknown table id {other} (expected 1..=7)"
        ))),
    }
}

fn report_flops(cfg: &CostConfig, tables: &ReferenceTables) -> Result<TableReport> {
    let mut cells = Vec::new();
    for row in &tables.flops {
        let n = row.n;
        let dense = flops_dense(n, cfg) as f64;
        let attention = flops_freq_attention(n, cfg) as f64;
        let transform = flops_transform(n, cfg)?;
        let total = attention + transform;
        cells.push(ReportCell { key: n, column: "dense_flops", computed: dense, reference: row.dense_flops as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "freq_attention_flops", computed: attention, reference: row.freq_attention_flops as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "transform_flops", computed: transform, reference: row.transform_flops as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "freq_total_flops", computed: total, reference: row.total_flops as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "reduction_vs_dense", computed: dense / total, reference: row.reduction, kind: CellKind::Fixed(2) });
    }
    let first = tables.flops.first().map(|r| r.reduction).unwrap_or(0.0);
    let last = tables.flops.last().map(|r| r.reduction).unwrap_or(0.0);
    let notes = vec![
        "freq_attention_flops anchors deviate from the closed-form model by a rule that is not recoverable from the published values; deviations are reported, not reproduced".to_string(),
        "the transform anchor at n=524288 is consistent with its own total-minus-attention column but exceeds the offset-4 closed form by 999424; the other four rows match it exactly".to_string(),
        format!(
            "anchored reduction column spans {first:.2}x-{last:.2}x, inconsistent with the separately quoted headline range {:.1}x-{:.1}x; surfaced as a data inconsistency, not resolved",
            HEADLINE_FLOP_REDUCTION.0, HEADLINE_FLOP_REDUCTION.1
        ),
    ];
    Ok(TableReport { table_id: 1, key_name: "n", cells, notes })
}

fn report_traffic(cfg: &CostConfig, tables: &ReferenceTables) -> Result<TableReport> {
    let mut cells = Vec::new();
    for row in &tables.traffic {
        let n = row.n;
        let dense = traffic_dense(n, cfg) as f64;
        let freq = traffic_freq(n, cfg) as f64;
        cells.push(ReportCell { key: n, column: "dense_bytes", computed: dense, reference: row.dense_bytes as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "dense_gib", computed: dense / GIB, reference: row.dense_gib, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "freq_bytes", computed: freq, reference: row.freq_bytes as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "freq_gib", computed: freq / GIB, reference: row.freq_gib, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "reduction", computed: dense / freq, reference: row.reduction, kind: CellKind::Fixed(2) });
    }
    let first = tables.traffic.first().map(|r| r.reduction).unwrap_or(0.0);
    let last = tables.traffic.last().map(|r| r.reduction).unwrap_or(0.0);
    let notes = vec![format!(
        "anchored traffic reduction spans {first:.2}x-{last:.2}x, inconsistent with the separately quoted headline range {:.1}x-{:.1}x",
        HEADLINE_TRAFFIC_REDUCTION.0, HEADLINE_TRAFFIC_REDUCTION.1
    )];
    Ok(TableReport { table_id: 2, key_name: "n", cells, notes })
}

fn report_intensity(cfg: &CostConfig, tables: &ReferenceTables) -> Result<TableReport> {
    let mut cells = Vec::new();
    for row in &tables.intensity {
        let n = row.n;
        let dense = arithmetic_intensity(flops_dense(n, cfg) as f64, traffic_dense(n, cfg) as f64)?;
        let attn = arithmetic_intensity(
            flops_freq_attention(n, cfg) as f64,
            traffic_freq(n, cfg) as f64,
        )?;
        let total = arithmetic_intensity(flops_freq_total(n, cfg)?, traffic_freq(n, cfg) as f64)?;
        cells.push(ReportCell { key: n, column: "dense_intensity", computed: dense, reference: row.dense, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "attention_intensity", computed: attn, reference: row.attention_only, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "total_intensity", computed: total, reference: row.total, kind: CellKind::Fixed(4) });
    }
    Ok(TableReport { table_id: 3, key_name: "n", cells, notes: Vec::new() })
}

fn report_throughput(
    cfg: &CostConfig,
    mode: RooflineMode,
    tables: &ReferenceTables,
    profile: &HardwareProfile,
) -> Result<TableReport> {
    let rows = match profile.name.as_str() {
        "h100" => &tables.throughput_h100,
        "h20" => &tables.throughput_h20,
        other => return Err(Error::Argument(format!("no throughput anchors for {other}"))),
    };
    let mut cells = Vec::new();
    for row in rows {
        let n = row.n;
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
            Execution::Fused,
        );
        cells.push(ReportCell { key: n, column: "dense_ms", computed: dense_t * 1e3, reference: row.dense_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "dense_tokens_per_s", computed: tokens_per_second(n, dense_t), reference: row.dense_tokens_per_s, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "freq_fused_ms", computed: freq_t * 1e3, reference: row.freq_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "freq_fused_tokens_per_s", computed: tokens_per_second(n, freq_t), reference: row.freq_tokens_per_s, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "speedup", computed: dense_t / freq_t, reference: row.speedup, kind: CellKind::Fixed(2) });
    }
    let table_id = if profile.name == "h100" { 4 } else { 5 };
    Ok(TableReport { table_id, key_name: "n", cells, notes: Vec::new() })
}

fn report_fusion(
    cfg: &CostConfig,
    mode: RooflineMode,
    tables: &ReferenceTables,
) -> Result<TableReport> {
    let profile = HardwareProfile::h100();
    let mut cells = Vec::new();
    for row in &tables.fusion_h100 {
        let n = row.n;
        let flops = flops_freq_total(n, cfg)?;
        let bytes = traffic_freq(n, cfg) as f64;
        let fused = roofline_time(flops, bytes, &profile, mode, Execution::Fused);
        let separate = roofline_time(flops, bytes, &profile, mode, Execution::Separate);
        cells.push(ReportCell { key: n, column: "fused_ms", computed: fused * 1e3, reference: row.fused_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "separate_ms", computed: separate * 1e3, reference: row.separate_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key: n, column: "fused_tokens_per_s", computed: tokens_per_second(n, fused), reference: row.fused_tokens_per_s, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "separate_tokens_per_s", computed: tokens_per_second(n, separate), reference: row.separate_tokens_per_s, kind: CellKind::Integer });
        cells.push(ReportCell { key: n, column: "fused_speedup", computed: separate / fused, reference: row.fused_speedup, kind: CellKind::Fixed(4) });
    }
    let notes = vec![
        "separate-time anchors track the additive unfused model at the smallest length and drift as n grows; no single composition of the stated terms reproduces every row, so the additive model is reported with per-row deviations".to_string(),
    ];
    Ok(TableReport { table_id: 6, key_name: "n", cells, notes })
}

fn report_duration(
    cfg: &CostConfig,
    mode: RooflineMode,
    tables: &ReferenceTables,
) -> Result<TableReport> {
    let profile = HardwareProfile::h100();
    let mut cells = Vec::new();
    for row in &tables.duration_h100 {
        let key = row.duration_s;
        let n = duration_to_tokens(key as f64);
        let dense_t = roofline_time(
            flops_dense(n, cfg) as f64,
            traffic_dense(n, cfg) as f64,
            &profile,
            mode,
            Execution::Fused,
        );
        let freq_t = roofline_time(
            flops_freq_total(n, cfg)?,
            traffic_freq(n, cfg) as f64,
            &profile,
            mode,
            Execution::Fused,
        );
        cells.push(ReportCell { key, column: "tokens", computed: n as f64, reference: row.n as f64, kind: CellKind::Integer });
        cells.push(ReportCell { key, column: "dense_ms", computed: dense_t * 1e3, reference: row.dense_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key, column: "freq_ms", computed: freq_t * 1e3, reference: row.freq_ms, kind: CellKind::Fixed(4) });
        cells.push(ReportCell { key, column: "speedup", computed: dense_t / freq_t, reference: row.speedup, kind: CellKind::Fixed(2) });
    }
    Ok(TableReport { table_id: 7, key_name: "duration_s", cells, notes: Vec::new() })
}
