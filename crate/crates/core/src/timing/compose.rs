use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::Result;
use crate::flatten::{collect_calls, SpecializedProgram};

use super::schedule::{schedule_body, Block, ModuleSchedule};
use super::SchedulingMode;

#[derive(Clone, Debug)]
pub struct CpEstimate {
    pub length: u64,
    pub mode: SchedulingMode,
    /// Remodularization threshold the program was prepared with, if any.
    pub threshold: Option<u128>,
    /// Schedule of every reachable module in this mode.
    pub schedules: HashMap<String, ModuleSchedule>,
    pub elapsed: Duration,
}

impl CpEstimate {
    pub fn modules_scheduled(&self) -> usize {
        self.schedules.len()
    }

    /// `mode,threshold,length,modules,seconds`.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.6}",
            self.mode,
            threshold_text(self.threshold),
            self.length,
            self.modules_scheduled(),
            self.elapsed.as_secs_f64()
        )
    }

    /// Module name and length, longest first.
    pub fn module_lengths(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self
            .schedules
            .iter()
            .map(|(n, s)| (n.as_str(), s.length))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

pub(crate) fn threshold_text(t: Option<u128>) -> String {
    match t {
        None => "none".into(),
        Some(u128::MAX) => "inf".into(),
        Some(n) => n.to_string(),
    }
}

impl std::fmt::Display for CpEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "mode={} threshold={} length={} modules={} time={:.3}s",
            self.mode,
            threshold_text(self.threshold),
            self.length,
            self.modules_scheduled(),
            self.elapsed.as_secs_f64()
        )
    }
}

/// Schedule every module reachable from the entry, callees first. Modules
/// at the same call depth are independent and scheduled in parallel.
pub fn compose_critical_path(p: &SpecializedProgram, mode: SchedulingMode) -> Result<CpEstimate> {
    let start = Instant::now();
    let order = p.postorder()?;
    let mut depth: HashMap<&str, usize> = HashMap::new();
    for name in &order {
        let mut d = 0;
        collect_calls(&p.module(name)?.body, &mut |c| {
            d = d.max(depth.get(c).map_or(0, |x| x + 1));
        });
        depth.insert(name.as_str(), d);
    }
    let levels = depth.values().copied().max().map_or(0, |d| d + 1);
    let mut schedules: HashMap<String, ModuleSchedule> = HashMap::new();
    let mut summaries: HashMap<String, Block> = HashMap::new();
    for level in 0..levels {
        let names: Vec<&String> = order
            .iter()
            .filter(|n| depth[n.as_str()] == level)
            .collect();
        let done: Vec<(String, ModuleSchedule)> = names
            .par_iter()
            .map(|name| {
                let m = p.module(name)?;
                let s = schedule_body(m, &m.body, mode, &summaries)?;
                Ok(((*name).clone(), s))
            })
            .collect::<Result<_>>()?;
        for (name, s) in done {
            let m = p.module(&name)?;
            summaries.insert(name.clone(), s.summary(mode, |q| m.is_param(q.reg)));
            schedules.insert(name, s);
        }
    }
    let length = schedules.get(&p.entry).map_or(0, |s| s.length);
    Ok(CpEstimate {
        length,
        mode,
        threshold: None,
        schedules,
        elapsed: start.elapsed(),
    })
}
