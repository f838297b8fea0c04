use podvs::config::ResolutionMode;
use podvs::hw::fixed::FixedFormat;
use podvs::hw::{run_hw_pipeline, stage_costs, HwProfile};
use podvs::metrics::pcc;
use podvs::pipeline::{run_sequence_with, Backend, Pipeline};
use podvs::synth::{self, Scene};
use podvs::EngineConfig;

#[test]
fn ledger_is_additive_and_reproducible() {
    for mode in [ResolutionMode::Hw112, ResolutionMode::Hw80] {
        for channels in 1..=9 {
            let p = HwProfile::new(mode, channels).unwrap();
            assert_eq!(p.total_cycles, p.stages.iter().map(|s| s.cycles).sum::<u64>());
            assert_eq!(p, HwProfile::new(mode, channels).unwrap());
            assert_eq!(p.stages, stage_costs(mode).unwrap());
        }
    }
}

#[test]
fn more_channels_never_slow_the_frame_rate() {
    for mode in [ResolutionMode::Hw112, ResolutionMode::Hw80] {
        let rates: Vec<f64> = (1..=9).map(|c| HwProfile::new(mode, c).unwrap().frame_rate_hz).collect();
        assert!(rates.windows(2).all(|w| w[1] > w[0]));
    }
}

fn mean_pcc(cfg: &EngineConfig, scenes: &[(Scene, usize)]) -> f64 {
    let (w, h) = cfg.dims();
    let mut v = Vec::new();
    for &(s, n) in scenes {
        let frames = s.frames(w, h, n);
        let float = run_sequence_with(&frames, Pipeline::new(cfg.clone()).unwrap()).unwrap();
        let fixed = run_sequence_with(&frames, Pipeline::with_backend(cfg.clone(), Backend::Fixed).unwrap()).unwrap();
        v.extend(float.maps.iter().zip(&fixed.maps).filter_map(|(a, b)| pcc(a, b).ok()));
    }
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn more_fraction_bits_never_lower_fidelity() {
    let scenes = [(Scene::Popout, 2), (Scene::Moving, 4)];
    let mut last = f64::NEG_INFINITY;
    for frac in [2, 4, 8] {
        let mut cfg = EngineConfig::for_mode(ResolutionMode::Hw112);
        cfg.fixed.data = FixedFormat::new(10 + frac, frac, true);
        let p = mean_pcc(&cfg, &scenes);
        assert!(p >= last - 1e-9, "{frac} fraction bits: {p} after {last}");
        last = p;
    }
    assert!(last > 0.95);
}

#[test]
fn hw_run_reports_profile_and_flags() {
    let cfg = EngineConfig::for_mode(ResolutionMode::Hw80);
    let frames = synth::popout(80, 60, 2);
    let run = run_hw_pipeline(&frames, &cfg, 2).unwrap();
    assert_eq!(run.maps.len(), 2);
    assert_eq!(run.profile.channels_parallel, 2);
    assert!(run.maps.iter().all(|m| m.dims() == (80, 60) && m.min() >= 0.0 && m.max() <= 1.0));
    assert!(run_hw_pipeline(&frames, &EngineConfig::for_mode(ResolutionMode::Hw112), 1).is_err());
}

#[test]
fn default_words_never_clip_on_synthetic_scenes() {
    let cfg = EngineConfig::for_mode(ResolutionMode::Hw112);
    for scene in Scene::ALL {
        let run = run_hw_pipeline(&scene.frames(112, 84, 3), &cfg, 1).unwrap();
        assert_eq!(run.profile.flags.saturations, 0, "{scene}");
        assert_eq!(run.profile.flags.accumulator_overflows, 0, "{scene}");
    }
}
