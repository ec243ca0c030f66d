use serde::{Deserialize, Serialize};

use super::{BenchConfig, InstanceEntry, SolverEntry, SolverKind};
use crate::baselines::Variant;
use crate::objectives::InstanceSpec;

/// Condition number of `A` for the square f3 instance.
const SQUARE_F3_CONDITION: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// The published instance sizes.
    Paper,
    /// `m` and `n` divided by 10, except the already small square f3.
    Desk,
}

impl Scale {
    pub fn config(self) -> BenchConfig {
        match self {
            Scale::Paper => paper_config(),
            Scale::Desk => desk_config(),
        }
    }
}

fn entry(label: &str, spec: InstanceSpec) -> InstanceEntry {
    InstanceEntry { label: label.into(), spec }
}

/// The seven comparison instances at size divisor `k`.
fn table_instances(k: usize) -> Vec<InstanceEntry> {
    vec![
        entry("ins1", InstanceSpec::f1(6000 / k, 2000 / k, 1.0, 1, 1e-8)),
        entry("ins2", InstanceSpec::f1(6000 / k, 2000 / k, 0.5, 2, 1e-8)),
        entry("ins3", InstanceSpec::f2(500 / k, 100.0, 0.012, 3, 1e-3)),
        entry("ins4", InstanceSpec::f2(1000 / k, 10.0, 0.006, 4, 1e-8)),
        entry("ins5", InstanceSpec::f3(1500 / k, 3000 / k, 6, 0.5, 5, 1e-18)),
        entry("ins6", InstanceSpec::f3(2500 / k, 5000 / k, 4, 0.5, 6, 1e-18)),
        entry("ins7", InstanceSpec::f3(50, 50, 4, 1.0, 7, 1e-8).with_condition(SQUARE_F3_CONDITION)),
    ]
}

fn table_solvers() -> Vec<SolverEntry> {
    vec![
        SolverEntry { label: "cgso".into(), kind: SolverKind::Cgso { options: Default::default() } },
        SolverEntry {
            label: "cg_hz".into(),
            kind: SolverKind::NonlinearCg { variant: Variant::HagerZhang, options: Default::default() },
        },
    ]
}

/// Full-size comparison matrix, one repetition.
pub fn paper_config() -> BenchConfig {
    BenchConfig {
        name: "paper".into(),
        instances: table_instances(1),
        solvers: table_solvers(),
        seed: 0,
        repetitions: 1,
        out_dir: None,
    }
}

/// Reduced comparison matrix, three repetitions.
pub fn desk_config() -> BenchConfig {
    BenchConfig {
        name: "desk".into(),
        instances: table_instances(10),
        solvers: table_solvers(),
        seed: 0,
        repetitions: 3,
        out_dir: None,
    }
}
