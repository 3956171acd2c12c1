use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xbar_core::demo::{demo_mlp_with, DemoOptions, MlpFixture};
use xbar_core::{demo_mlp, WireModel};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny_mlp")
}

// Frozen from a run of the default pipeline; exact accuracy comes from the
// fixture generator's integer reference.
#[test]
fn default_accuracies_are_frozen() {
    let r = demo_mlp(&fixture_dir()).unwrap();
    assert_eq!(r.samples, 200);
    assert!((r.exact_accuracy - 0.945).abs() < 1e-12);
    assert!((r.baseline_accuracy - 0.865).abs() < 1e-12, "{r:?}");
    assert!((r.wagonn_accuracy - 0.870).abs() < 1e-12, "{r:?}");
}

#[test]
fn ideal_wires_reproduce_exact_inference() {
    let fx = MlpFixture::load(&fixture_dir()).unwrap();
    let opts = DemoOptions { wire: WireModel::ideal(), ..DemoOptions::default() };
    let r = demo_mlp_with(&fx, &opts).unwrap();
    assert_eq!(r.baseline_accuracy, r.exact_accuracy);
    assert_eq!(r.wagonn_accuracy, r.exact_accuracy);
}

// Negative control: with labels shuffled nothing beats chance (0.1).
#[test]
fn shuffled_labels_sit_at_chance() {
    let mut fx = MlpFixture::load(&fixture_dir()).unwrap();
    let mut labels: Vec<usize> = fx.samples.iter().map(|s| s.0).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(11));
    for (s, l) in fx.samples.iter_mut().zip(labels) {
        s.0 = l;
    }
    let r = demo_mlp_with(&fx, &DemoOptions::default()).unwrap();
    for acc in [r.exact_accuracy, r.baseline_accuracy, r.wagonn_accuracy] {
        assert!((0.02..=0.22).contains(&acc), "{r:?}");
    }
}

#[test]
fn malformed_fixture_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["mlp.json", "layer1.xbw", "layer2.xbw", "samples.csv"] {
        std::fs::copy(fixture_dir().join(f), dir.path().join(f)).unwrap();
    }
    std::fs::write(dir.path().join("samples.csv"), "3,1,2\n").unwrap();
    assert!(MlpFixture::load(dir.path()).is_err());
}
