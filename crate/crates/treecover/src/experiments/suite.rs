//! Every experiment in a fixed order, folded into one report.

use super::{Experiment, ExperimentRegistry, RunContext, SUITE_ORDER};
use crate::error::Result;
use crate::report::ExperimentReport;

pub struct FullSuite;

impl Experiment for FullSuite {
    fn name(&self) -> &'static str {
        "full-suite"
    }

    fn description(&self) -> &'static str {
        "all experiments in sequence; parameters `name.key` reach only `name`"
    }

    fn run(&self, ctx: &RunContext) -> Result<ExperimentReport> {
        let registry = ExperimentRegistry::default();
        let mut report = ExperimentReport::new(self.name(), ctx.seed);
        let only = ctx.params.string("only", "")?;
        for name in SUITE_ORDER {
            if !only.is_empty() && !only.split(',').any(|o| o.trim() == name) {
                continue;
            }
            let child = ctx.child(name);
            let sub = registry.run(name, &child)?;
            report.absorb(&sub);
        }
        Ok(report)
    }
}
