use albatch::dataset::{synth_generate, SynthConfig};
use albatch::seed::RunSeeds;
use albatch::strategies::run_strategy;

#[test]
fn readme_example() {
    let subject = synth_generate(&SynthConfig::default()).unwrap();
    let spec = "eemcm".parse().unwrap();
    let trace = run_strategy(&subject.dataset, &spec, 12, &RunSeeds::new(0, 0, 0)).unwrap();
    assert_eq!(trace.state.labeled().len(), 60);
    assert!(trace.state.labeled().iter().all(|i| !trace.state.blacklisted().contains(i)));
}
