//! Writes two small policy runs to disk and summarises them: mean curves,
//! smoothed training returns and a paired test on the area under the curve.

use dialogue_shaping::env::Ontology;
use dialogue_shaping::gpsarsa::KernelConfig;
use dialogue_shaping::harness::report::write_policy_run;
use dialogue_shaping::harness::{report, train_policy, PolicyConfig, Potential, ReportConfig, DIALOGUE_KERNEL_SCALE};
use dialogue_shaping::shaping::{PotentialSource, ShapingConfig};

fn main() -> dialogue_shaping::Result<()> {
    let ontology = Ontology::desk_default();
    let dir = std::env::temp_dir().join("shaping_report_example");
    let cfg = PolicyConfig { seeds: (0..4).collect(), budget: 150, eval_every: 50, eval_n: 100, ..Default::default() };
    let kernel = KernelConfig { kernel_scale: DIALOGUE_KERNEL_SCALE, ..Default::default() };
    for (source, potential) in [(PotentialSource::None, Potential::None), (PotentialSource::OracleHeuristic, Potential::Oracle)] {
        let shaping = ShapingConfig { source, ..Default::default() };
        write_policy_run(&dir, &train_policy(&ontology, &cfg, &kernel, &shaping, potential)?)?;
    }
    let tables = report(&dir, &dir, &ReportConfig { window: 20, ..Default::default() })?;
    for row in &tables.summary {
        println!(
            "{:<16} auc {:>6.2} ± {:.2}  final {:>6.2}  diff {:?}  p {:?}",
            row.source, row.auc_mean, row.auc_se, row.final_reward, row.auc_diff, row.p_value
        );
    }
    println!("tables in {}", dir.display());
    Ok(())
}
