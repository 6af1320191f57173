//! CSV and JSON rendering of run reports, plans and timings.

use std::io::Write;

use dcsim_core::consolidation::MigrationPlan;
use dcsim_core::metrics::RunReport;
use dcsim_core::model::Move;
use serde_json::{json, Value};

pub const REPORT_COLUMNS: [&str; 16] = [
    "scenario",
    "mode",
    "threshold",
    "seed",
    "bins_used",
    "hosts_before",
    "hosts_after",
    "power_w_before",
    "power_w_after",
    "vm_moves",
    "cnt_moves",
    "total_migration_s",
    "sum_downtime_s",
    "max_downtime_s",
    "sla_level",
    "sla_violations",
];

pub const MOVE_COLUMNS: [&str; 5] = ["step", "kind", "subject", "from", "to"];
pub const TIMING_COLUMNS: [&str; 5] = ["move", "kind", "rounds", "downtime_s", "total_s"];
pub const SWEEP_COLUMNS: [&str; 3] = ["threshold", "lower_bound", "ffd_bins"];

/// Renders a float with at least six significant digits and never fewer
/// decimals than its shortest exact representation.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.000000".into();
    }
    let shortest = format!("{x}");
    let shortest_decimals = shortest.split_once('.').map_or(0, |(_, d)| d.len());
    let magnitude = x.abs().log10().floor() as i32;
    let sig6 = (5 - magnitude).max(0) as usize;
    format!("{:.*}", shortest_decimals.max(sig6), x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub label: String,
    pub kind: String,
    pub rounds: usize,
    pub downtime_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub lower_bound: u64,
    pub ffd_bins: usize,
}

pub fn report_record(r: &RunReport) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.mode.clone(),
        fmt_float(r.threshold),
        r.seed.to_string(),
        r.bins_used.to_string(),
        r.hosts_before.to_string(),
        r.hosts_after.to_string(),
        fmt_float(r.power_w_before),
        fmt_float(r.power_w_after),
        r.vm_moves.to_string(),
        r.cnt_moves.to_string(),
        fmt_float(r.total_migration_s),
        fmt_float(r.sum_downtime_s),
        fmt_float(r.max_downtime_s),
        fmt_float(r.sla_level),
        r.sla_violations.to_string(),
    ]
}

fn write_rows<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report_csv<W: Write>(w: W, reports: &[RunReport]) -> csv::Result<()> {
    write_rows(w, &REPORT_COLUMNS, reports.iter().map(report_record))
}

pub fn write_moves_csv<W: Write>(w: W, plan: &MigrationPlan) -> csv::Result<()> {
    let rows = plan.moves.iter().enumerate().map(|(i, m)| {
        vec![
            (i + 1).to_string(),
            m.kind.label().to_string(),
            m.subject_id.clone(),
            m.from_id.clone(),
            m.to_id.clone(),
        ]
    });
    write_rows(w, &MOVE_COLUMNS, rows)
}

/// Reads a moves CSV back into a committed plan.
pub fn read_moves_csv<R: std::io::Read>(r: R) -> Result<MigrationPlan, String> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(MOVE_COLUMNS) {
        return Err(format!(
            "unexpected moves header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let mut moves = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let kind = match &rec[1] {
            "vm" => dcsim_core::model::MoveKind::Vm,
            "cnt" => dcsim_core::model::MoveKind::Cnt,
            other => return Err(format!("row {}: unknown move kind `{other}`", i + 1)),
        };
        moves.push(Move {
            kind,
            subject_id: rec[2].to_string(),
            from_id: rec[3].to_string(),
            to_id: rec[4].to_string(),
        });
    }
    Ok(MigrationPlan {
        moves,
        committed: true,
        ..MigrationPlan::default()
    })
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingRow]) -> csv::Result<()> {
    let rows = rows.iter().map(|t| {
        vec![
            t.label.clone(),
            t.kind.clone(),
            t.rounds.to_string(),
            fmt_float(t.downtime_s),
            fmt_float(t.total_s),
        ]
    });
    write_rows(w, &TIMING_COLUMNS, rows)
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> csv::Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            fmt_float(r.threshold),
            r.lower_bound.to_string(),
            r.ffd_bins.to_string(),
        ]
    });
    write_rows(w, &SWEEP_COLUMNS, rows)
}

/// Report fields at the top level plus a `metadata` object. The timestamp
/// lives only here so CSV output stays byte-identical across runs.
pub fn report_json(report: &RunReport, extra: Vec<(&str, Value)>) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    let obj = v.as_object_mut().expect("report is an object");
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    obj.insert(
        "metadata".into(),
        json!({ "generator": concat!("dcsim ", env!("CARGO_PKG_VERSION")), "generated_unix_s": now }),
    );
    for (k, val) in extra {
        obj.insert(k.into(), val);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rendering() {
        assert_eq!(fmt_float(0.9), "0.900000");
        assert_eq!(fmt_float(750.0), "750.000");
        assert_eq!(fmt_float(0.406), "0.406000");
        assert_eq!(fmt_float(11.05625), "11.05625");
        assert_eq!(fmt_float(0.0), "0.000000");
        assert_eq!(fmt_float(0.00123), "0.00123000");
        assert_eq!(fmt_float(123456789.0), "123456789");
    }

    #[test]
    fn moves_round_trip() {
        let plan = MigrationPlan {
            moves: vec![
                Move::container(&"c1".into(), &"v7".into(), &"v1".into()),
                Move::vm(&"v2".into(), &"h1".into(), &"h2".into()),
            ],
            committed: true,
            ..MigrationPlan::default()
        };
        let mut buf = Vec::new();
        write_moves_csv(&mut buf, &plan).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "step,kind,subject,from,to\n1,cnt,c1,v7,v1\n2,vm,v2,h1,h2\n"
        );
        assert_eq!(read_moves_csv(&buf[..]).unwrap(), plan);
        assert!(read_moves_csv(&b"a,b\n"[..]).is_err());
    }
}
