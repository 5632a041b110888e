use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::mip::Sense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Incumbent,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time_s: f64,
    pub objective: f64,
    pub event: Event,
}

/// Time-stamped incumbent improvements, optionally closed by an `end` row
/// repeating the final objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn incumbents(&self) -> impl Iterator<Item = &TrajectoryPoint> {
        self.points.iter().filter(|p| p.event == Event::Incumbent)
    }

    pub fn push_incumbent(&mut self, time_s: f64, objective: f64) {
        self.points.push(TrajectoryPoint {
            time_s,
            objective,
            event: Event::Incumbent,
        });
    }

    /// Appends the closing row when at least one incumbent exists.
    pub fn close(&mut self, time_s: f64) {
        if let Some(last) = self.incumbents().last().copied() {
            self.points.push(TrajectoryPoint {
                time_s: time_s.max(last.time_s),
                objective: last.objective,
                event: Event::End,
            });
        }
    }

    /// Times non-decreasing and incumbent objectives strictly improving.
    pub fn check(&self, sense: Sense) -> std::result::Result<(), String> {
        for w in self.points.windows(2) {
            if w[1].time_s < w[0].time_s {
                return Err(format!("time goes backwards: {} -> {}", w[0].time_s, w[1].time_s));
            }
        }
        let objs: Vec<f64> = self.incumbents().map(|p| p.objective).collect();
        for w in objs.windows(2) {
            if !sense.improves(w[1], w[0], 0.0) {
                return Err(format!("objective does not improve: {} -> {}", w[0], w[1]));
            }
        }
        if let Some(end) = self.points.iter().position(|p| p.event == Event::End) {
            if end + 1 != self.points.len() {
                return Err("end row is not last".into());
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,objective,event\n");
        for p in &self.points {
            let event = match p.event {
                Event::Incumbent => "incumbent",
                Event::End => "end",
            };
            writeln!(out, "{:.3},{},{}", p.time_s, p.objective, event).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_text(path, &self.to_csv())
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("time_s,objective,event") {
            return Err(Error::parse(path, "missing trajectory header"));
        }
        let mut points = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            let [t, o, e] = fields[..] else {
                return Err(Error::parse(path, format!("bad row {line:?}")));
            };
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(path, e));
            let event = match e {
                "incumbent" => Event::Incumbent,
                "end" => Event::End,
                other => return Err(Error::parse(path, format!("unknown event {other:?}"))),
            };
            points.push(TrajectoryPoint {
                time_s: parse(t)?,
                objective: parse(o)?,
                event,
            });
        }
        Ok(Trajectory { points })
    }
}
