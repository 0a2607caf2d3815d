use std::path::PathBuf;

use uavtl::cityworld::{EnvConfig, EnvId, Profile};
use uavtl::transfer::TransferPlan;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_env_matches_preset() {
    let cfg = EnvConfig::load(configs().join("env2_desk.toml")).unwrap();
    assert_eq!(cfg.hash(), EnvConfig::preset(EnvId::Env2, Profile::Desk).hash());
}

#[test]
fn ctl_plan_has_three_stages() {
    let plan = TransferPlan::load(configs().join("ctl_desk.toml")).unwrap();
    assert_eq!(plan.profile, Profile::Desk);
    let labels: Vec<_> = plan.stages.iter().map(|s| s.label()).collect();
    assert_eq!(labels, ["env1", "env2", "env3"]);
}

#[test]
fn emergency_plan_resolves_to_emergency_env() {
    let plan = TransferPlan::load(configs().join("emergency_desk.toml")).unwrap();
    let cfg = plan.stages[1].env_config(1, plan.profile, &configs()).unwrap();
    assert_eq!(cfg.hash(), EnvConfig::emergency(Profile::Desk).hash());
    assert_eq!(plan.stage_hyperparams(1).max_episodes, 1500);
}
