use waelab::discrepancy::{wasserstein1, EmpiricalMeasure, LatentDistribution};
use waelab::experiments::evaluate_guarantees;
use waelab::intrinsic_dim::{default_eps_grid, minkowski_dim_estimate};
use waelab::pointio::{read_points, write_points};
use waelab::synth_data::{split, GroundTruthModel, ModelKind};
use waelab::wae_core::{layer_dims, train, DissKind, TrainableMlp, WaeConfig};

fn config(d: usize, ell: usize, diss_kind: DissKind) -> WaeConfig {
    WaeConfig {
        lambda: 10.0,
        diss_kind,
        cost: Default::default(),
        batch_size: 32,
        learning_rate: 1e-3,
        epochs: 4,
        seed: 7,
        latent_dim: ell,
        data_dim: d,
        kernel_sigma: None,
        latent: LatentDistribution::UniformCube,
    }
}

#[test]
fn generated_data_survives_disk_and_keeps_its_dimension() {
    let model = GroundTruthModel::new(ModelKind::SineRidge, 2, 6).unwrap();
    let data = model.generate_dataset(20_000, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.txt");
    write_points(&path, &data).unwrap();
    let back = read_points(&path).unwrap();
    assert_eq!(back, data);

    let est = minkowski_dim_estimate(&back, &default_eps_grid()).unwrap();
    assert!((est.slope - 2.0).abs() < 0.5, "slope {}", est.slope);
}

#[test]
fn ground_truth_pair_beats_a_trained_pair() {
    let (d, ell) = (4, 1);
    let model = GroundTruthModel::new(ModelKind::AffineEmbed, ell, d).unwrap();
    let data = model.generate_dataset(600, 11);
    let (train_set, test_set) = split(&data, 0.5, 1).unwrap();
    let latents = model.sample_latent(300, 99);
    let cfg = config(d, ell, DissKind::Mmd2);

    let truth = evaluate_guarantees(
        &|z: &[f64]| Ok(model.generate(z)),
        &|x: &[f64]| Ok(model.encode(x)),
        &test_set,
        &latents,
        &cfg,
        5,
    )
    .unwrap();
    assert!(truth.recon_test < 1e-20, "recon {}", truth.recon_test);
    assert!(truth.chain_holds);

    let dec = layer_dims(ell, d, 3, 400, 8);
    let enc = layer_dims(d, ell, 3, 400, 8);
    let pair = train(&train_set, &dec, &enc, &cfg).unwrap();
    assert!(!pair.log.is_empty());
    assert!(pair.log.iter().all(|r| r.total.is_finite()));
    let learned = evaluate_guarantees(
        &|z: &[f64]| pair.decoder.forward(z),
        &|x: &[f64]| pair.encoder.forward(x),
        &test_set,
        &latents,
        &cfg,
        5,
    )
    .unwrap();
    assert!(learned.objective_test > truth.objective_test);
    assert!(learned.chain_holds);
    let expected = learned.recon_test + cfg.lambda * learned.encode_diss;
    assert!((learned.objective_test - expected).abs() <= 1e-12 * expected.max(1.0));
}

#[test]
fn trained_decoder_exports_to_an_equivalent_relu_network() {
    let (d, ell) = (3, 1);
    let model = GroundTruthModel::new(ModelKind::TorusLike, ell, d).unwrap();
    let data = model.generate_dataset(128, 4);
    let cfg = config(d, ell, DissKind::W1);
    let pair = train(&data, &[ell, 12, 12, d], &[d, 12, 12, ell], &cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decoder.json");
    pair.decoder.save(&path).unwrap();
    let loaded = TrainableMlp::load(&path).unwrap();
    let net = loaded.to_relu_network().unwrap();

    let zs = model.sample_latent(50, 8);
    for z in &zs {
        let a = pair.decoder.forward(z).unwrap();
        let b = net.evaluate(z).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-12, "{u} vs {v}");
            assert!((0.0..=1.0).contains(v));
        }
    }

    // Pushing the latent sample through two identical decoders gives W1 = 0.
    let p = EmpiricalMeasure::uniform(zs.iter().map(|z| pair.decoder.forward(z).unwrap()).collect()).unwrap();
    let q = EmpiricalMeasure::uniform(net.evaluate_batch(&zs).unwrap()).unwrap();
    assert!(wasserstein1(&p, &q).unwrap() <= 1e-10);
}
