use std::path::Path;

use super::state::Action;
use super::step::RewardBreakdown;
use crate::error::{Error, Result};
use crate::io::{write_csv, CsvRow};

pub const TRACE_HEADER: &[&str] = &[
    "step", "x", "y", "action", "s_t", "r_m", "r_p", "r_v", "r_c", "r_nl", "r_e", "r_total",
    "cracks_detected_cum",
];

/// One row of an episode trace; `x`, `y` and `s_t` are after the action.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u32,
    pub x: usize,
    pub y: usize,
    pub action: Action,
    pub s_t: bool,
    pub reward: RewardBreakdown,
    pub cracks_detected_cum: usize,
}

impl CsvRow for TraceRow {
    fn fields(&self) -> Vec<String> {
        let r = &self.reward;
        vec![
            self.step.to_string(),
            self.x.to_string(),
            self.y.to_string(),
            self.action.to_string(),
            u8::from(self.s_t).to_string(),
            r.r_m.to_string(),
            r.r_p.to_string(),
            r.r_v.to_string(),
            r.r_c.to_string(),
            r.r_nl.to_string(),
            r.r_e.to_string(),
            r.total.to_string(),
            self.cracks_detected_cum.to_string(),
        ]
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_csv(path, TRACE_HEADER, rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Corrupt { path: path.into(), detail: "unexpected trace header".into() });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |i: usize| Error::Corrupt {
            path: path.into(),
            detail: format!("bad `{}` value `{}`", TRACE_HEADER[i], &rec[i]),
        };
        let int = |i: usize| rec[i].parse::<i64>().map_err(|_| bad(i));
        let reward = RewardBreakdown {
            r_m: int(5)?,
            r_p: int(6)?,
            r_v: int(7)?,
            r_c: int(8)?,
            r_nl: int(9)?,
            r_e: int(10)?,
            total: int(11)?,
        };
        out.push(TraceRow {
            step: int(0)? as u32,
            x: int(1)? as usize,
            y: int(2)? as usize,
            action: rec[3].parse().map_err(|_| bad(3))?,
            s_t: int(4)? != 0,
            reward,
            cracks_detected_cum: int(12)? as usize,
        });
    }
    Ok(out)
}
