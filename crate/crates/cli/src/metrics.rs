//! Per-round metrics rows and their on-disk formats.
//!
//! Both writers are hand-rolled so the byte stream is fully pinned:
//! floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every finite f64 exactly, and identical runs therefore
//! produce identical files.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Schema tag stamped on every row.
pub const METRICS_SCHEMA: &str = "v1";

/// One global round of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub schema: String,
    /// Links the row to its configuration and seed.
    pub config_digest: String,
    pub round: u32,
    /// Clients that trained this round.
    pub participants: u32,
    /// Clients served per miner, e.g. `miner0:3;miner1:2`.
    pub miner_loads: String,
    /// Mean of participants' local mean losses at the new weights.
    pub global_loss: f64,
    pub total_utility: f64,
    /// Utility-minus-loss round objective.
    pub objective: f64,
    /// Cumulative transferred weight values, client to miner.
    pub comm_uploaded: u64,
    /// Cumulative transferred weight values, chain to clients.
    pub comm_downloaded: u64,
    /// Cumulative transferred weight values, miner to miner.
    pub comm_broadcast: u64,
    /// Simulated seconds elapsed since the run started.
    pub wall_time_s: f64,
    /// Sixteen hex characters identifying the global weight vector.
    pub weights_digest: String,
    pub weights_l2: f64,
    /// Loss on the held-out test set.
    pub test_loss: f64,
    /// Accuracy on the held-out test set.
    pub test_accuracy: f64,
}

pub const CSV_HEADER: &str = "schema,config_digest,round,participants,miner_loads,global_loss,\
total_utility,objective,comm_uploaded,comm_downloaded,comm_broadcast,wall_time_s,\
weights_digest,weights_l2,test_loss,test_accuracy";

/// 17-significant-digit scientific notation; exact for every f64.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_line(row: &MetricsRow) -> String {
    debug_assert!(
        !row.miner_loads.contains(',') && !row.config_digest.contains(','),
        "metrics strings must stay comma-free"
    );
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.schema,
        row.config_digest,
        row.round,
        row.participants,
        row.miner_loads,
        fmt_f64(row.global_loss),
        fmt_f64(row.total_utility),
        fmt_f64(row.objective),
        row.comm_uploaded,
        row.comm_downloaded,
        row.comm_broadcast,
        fmt_f64(row.wall_time_s),
        row.weights_digest,
        fmt_f64(row.weights_l2),
        fmt_f64(row.test_loss),
        fmt_f64(row.test_accuracy),
    )
}

fn json_line(row: &MetricsRow) -> String {
    let quote = |s: &str| serde_json::to_string(s).expect("string serialization cannot fail");
    format!(
        concat!(
            "{{\"schema\":{},\"config_digest\":{},\"round\":{},\"participants\":{},",
            "\"miner_loads\":{},\"global_loss\":{},\"total_utility\":{},\"objective\":{},",
            "\"comm_uploaded\":{},\"comm_downloaded\":{},\"comm_broadcast\":{},",
            "\"wall_time_s\":{},\"weights_digest\":{},\"weights_l2\":{},",
            "\"test_loss\":{},\"test_accuracy\":{}}}"
        ),
        quote(&row.schema),
        quote(&row.config_digest),
        row.round,
        row.participants,
        quote(&row.miner_loads),
        fmt_f64(row.global_loss),
        fmt_f64(row.total_utility),
        fmt_f64(row.objective),
        row.comm_uploaded,
        row.comm_downloaded,
        row.comm_broadcast,
        fmt_f64(row.wall_time_s),
        quote(&row.weights_digest),
        fmt_f64(row.weights_l2),
        fmt_f64(row.test_loss),
        fmt_f64(row.test_accuracy),
    )
}

/// Writes a header line and one comma-separated line per row.
pub fn write_csv(rows: &[MetricsRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

/// Writes one JSON object per line; floats keep full precision.
pub fn write_jsonl(rows: &[MetricsRow], out: &mut impl Write) -> io::Result<()> {
    for row in rows {
        writeln!(out, "{}", json_line(row))?;
    }
    Ok(())
}

/// One completed run inside a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Swept knob, e.g. `sigma`.
    pub axis: String,
    /// Value of the knob for this run.
    pub value: String,
    pub seed: u64,
    pub rounds: u32,
    pub global_loss: f64,
    pub objective: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "axis,value,seed,rounds,global_loss,objective,test_loss,test_accuracy";

pub fn write_sweep_csv(rows: &[SweepRow], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.axis,
            row.value,
            row.seed,
            row.rounds,
            fmt_f64(row.global_loss),
            fmt_f64(row.objective),
            fmt_f64(row.test_loss),
            fmt_f64(row.test_accuracy),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> MetricsRow {
        MetricsRow {
            schema: METRICS_SCHEMA.to_string(),
            config_digest: "deadbeef01234567".to_string(),
            round: 3,
            participants: 5,
            miner_loads: "miner0:3;miner1:2".to_string(),
            global_loss: 0.1 + 0.2,
            total_utility: 1234.5,
            objective: -0.75,
            comm_uploaded: 300,
            comm_downloaded: 900,
            comm_broadcast: 120,
            wall_time_s: 12.75,
            weights_digest: "0123456789abcdef".to_string(),
            weights_l2: 1e-300,
            test_loss: f64::MIN_POSITIVE,
            test_accuracy: 0.8125,
        }
    }

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [0.1 + 0.2, -0.0, 1e-300, f64::MIN_POSITIVE, 2.0f64.powi(-52), 87_781_179.347_260_9]
        {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v} mangled by formatting");
        }
    }

    #[test]
    fn csv_has_header_and_aligned_fields() {
        let rows = vec![sample_row(), sample_row()];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        let columns = CSV_HEADER.split(',').count();
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), columns);
        }
        assert!(lines[1].starts_with("v1,deadbeef01234567,3,5,miner0:3;miner1:2,"));
    }

    #[test]
    fn jsonl_round_trips_through_serde() {
        let row = sample_row();
        let mut buf = Vec::new();
        write_jsonl(std::slice::from_ref(&row), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: MetricsRow = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(parsed, row);
        assert_eq!(parsed.global_loss.to_bits(), row.global_loss.to_bits());
        assert_eq!(parsed.test_loss.to_bits(), row.test_loss.to_bits());
    }

    #[test]
    fn identical_rows_identical_bytes() {
        let rows = vec![sample_row()];
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&rows, &mut a).unwrap();
        write_csv(&rows, &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        let mut d = Vec::new();
        write_jsonl(&rows, &mut c).unwrap();
        write_jsonl(&rows, &mut d).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn sweep_rows_serialize_with_header() {
        let rows = vec![SweepRow {
            axis: "sigma".into(),
            value: "0.25".into(),
            seed: 7,
            rounds: 15,
            global_loss: 0.5,
            objective: 10.0,
            test_loss: 0.55,
            test_accuracy: 0.75,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(SWEEP_CSV_HEADER));
        assert!(text.contains("sigma,0.25,7,15,"));
    }
}
