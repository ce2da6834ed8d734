use ffno_core::container::FormatError;
use ffno_core::dataset::{
    apply_normalization, compute_norm_stats, from_bytes, generate_splits, generate_trajectories, invert_normalization,
    load, save, to_bytes, DatasetError, GenerationConfig, Preset, Split, TrajectoryDataset, TrajectoryMeta,
};
use ffno_core::evaluation::energy_spectrum;
use ffno_core::ffno::{build_input_channels, FrameContext, InputOptions};
use ffno_core::solver::{ForcingSpec, BLOW_UP_THRESHOLD};
use ffno_core::spectral::{fft2_forward, velocity_from_vorticity, Grid2};

fn small(preset: Preset, n: usize, seed: u64) -> GenerationConfig {
    let mut cfg = GenerationConfig::preset(preset, seed);
    cfg.solver = cfg.solver.with_grid(cfg.solver.grid.resized(n, n).unwrap());
    cfg.frames = 5;
    cfg.burn_in = 0.5;
    cfg.train = 2;
    cfg.valid = 1;
    cfg.test = 1;
    cfg
}

#[test]
fn generation_is_deterministic_and_shaped() {
    let cfg = small(Preset::TorusKochkov, 32, 3);
    let a = generate_trajectories(&cfg, Split::Train).unwrap();
    let b = generate_trajectories(&cfg, Split::Train).unwrap();
    assert_eq!(a.shape(), [2, 5, 32, 32]);
    assert_eq!(to_bytes(&a).unwrap(), to_bytes(&b).unwrap());
    assert!(a.vorticity.iter().all(|v| v.is_finite() && (v.abs() as f64) < BLOW_UP_THRESHOLD));

    let other = generate_trajectories(&small(Preset::TorusKochkov, 32, 4), Split::Train).unwrap();
    assert_ne!(a.vorticity, other.vorticity);
}

#[test]
fn splits_are_disjoint() {
    let s = generate_splits(&small(Preset::TorusKochkov, 16, 9)).unwrap();
    let firsts: Vec<&[f32]> = [&s.train, &s.valid, &s.test]
        .iter()
        .flat_map(|ds| (0..ds.len()).map(move |k| ds.frame(k, 0)))
        .collect();
    for i in 0..firsts.len() {
        for j in i + 1..firsts.len() {
            assert_ne!(firsts[i], firsts[j], "{i} and {j} share an initial frame");
        }
    }
    assert_eq!((s.train.split, s.valid.split, s.test.split), (Split::Train, Split::Valid, Split::Test));
}

#[test]
fn sampled_viscosity_stays_in_range() {
    let mut cfg = small(Preset::TorusV, 16, 2);
    cfg.frames = 2;
    cfg.burn_in = 0.0;
    cfg.train = 6;
    let ds = generate_trajectories(&cfg, Split::Train).unwrap();
    let [lo, hi] = cfg.viscosity_range.unwrap();
    for m in &ds.trajectories {
        assert!(m.viscosity >= lo && m.viscosity < hi, "{}", m.viscosity);
        assert!(m.forcing.amplitudes.is_some());
    }
    assert_ne!(ds.trajectories[0].viscosity, ds.trajectories[1].viscosity);
}

#[test]
fn kolmogorov_spectrum_decays_above_forcing_scale() {
    let mut cfg = GenerationConfig::preset(Preset::TorusKochkov, 5);
    cfg.frames = 2;
    cfg.train = 1;
    let ds = generate_trajectories(&cfg, Split::Train).unwrap();
    let omega = ds.frame_field(0, 1);
    let e = energy_spectrum(&velocity_from_vorticity(&fft2_forward(&omega).unwrap()));
    // the forcing sits at 4 cycles per domain; compare band averages past it
    let band = |a: usize, b: usize| e[a..b].iter().sum::<f64>() / (b - a) as f64;
    let bands = [band(5, 9), band(9, 13), band(13, 17), band(17, 25)];
    for w in bands.windows(2) {
        assert!(w[1] < w[0], "{bands:?}");
    }
}

fn tiny() -> TrajectoryDataset {
    let grid = Grid2::unit(4).unwrap();
    TrajectoryDataset {
        grid,
        record_dt: 0.5,
        start_time: 1.0,
        split: Split::Train,
        seed: 1,
        trajectories: vec![TrajectoryMeta { viscosity: 1e-3, forcing: ForcingSpec::kolmogorov_sin(0.1) }],
        frames: 3,
        vorticity: (0..48).map(|v| v as f32).collect(),
        provenance: serde_json::json!({"source": "hand-made"}),
    }
}

#[test]
fn norm_stats_match_hand_computation() {
    // input frames 0 and 1 hold 0..32; mean 15.5 and population variance (32^2 - 1) / 12
    let stats = compute_norm_stats(&tiny(), &InputOptions::default()).unwrap();
    assert_eq!(stats.channels, vec!["vorticity".to_string()]);
    assert!((stats.mean[0] - 15.5).abs() < 1e-12);
    assert!((stats.std[0] - (1023.0f64 / 12.0).sqrt()).abs() < 1e-12);

    // coordinate channels are averaged over the same frames
    let stats = compute_norm_stats(&tiny(), &InputOptions::with_coordinates()).unwrap();
    assert_eq!(stats.len(), 3);
    assert!((stats.mean[1] - 0.375).abs() < 1e-12 && (stats.mean[2] - 0.375).abs() < 1e-12);
}

#[test]
fn norm_rejects_constant_channels_and_other_splits() {
    let mut ds = tiny();
    ds.vorticity = vec![2.5; 48];
    assert!(matches!(compute_norm_stats(&ds, &InputOptions::default()), Err(DatasetError::ConstantChannel { .. })));
    let mut ds = tiny();
    ds.split = Split::Test;
    assert!(matches!(compute_norm_stats(&ds, &InputOptions::default()), Err(DatasetError::WrongSplit(Split::Test))));
}

#[test]
fn normalization_round_trip() {
    let ds = tiny();
    let opts = InputOptions { coordinates: true, viscosity: false, forcing: true };
    let stats = compute_norm_stats(&ds, &opts).unwrap();
    let meta = &ds.trajectories[0];
    let ctx = FrameContext { nu: meta.viscosity, forcing: &meta.forcing, t: ds.frame_time(1) };
    let x = build_input_channels(&ds.frame_field(0, 1), &opts, &ctx);
    let back = invert_normalization(&apply_normalization(&x, &stats).unwrap(), &stats).unwrap();
    let err = x.data().iter().zip(back.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-12, "{err}");
}

#[test]
fn save_load_is_bit_exact() {
    let ds = generate_trajectories(&small(Preset::TorusKochkov, 16, 1), Split::Valid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("valid.ffnods");
    save(&ds, &path).unwrap();
    let back = load(&path).unwrap();
    assert_eq!(back, ds);
    assert!(back.vorticity.iter().zip(&ds.vorticity).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(matches!(load(&dir.path().join("missing.ffnods")), Err(DatasetError::Format(FormatError::Io(_)))));
}

/// Rewrites the JSON header of an encoded file.
fn patch_header(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header = std::str::from_utf8(&bytes[12..12 + hlen]).unwrap();
    assert!(header.contains(from), "{header}");
    let header = header.replacen(from, to, 1);
    let mut out = bytes[..8].to_vec();
    out.extend((header.len() as u32).to_le_bytes());
    out.extend(header.as_bytes());
    out.extend(&bytes[12 + hlen..]);
    out
}

#[test]
fn corrupted_files_map_to_distinct_errors() {
    let bytes = to_bytes(&tiny()).unwrap();
    assert_eq!(from_bytes(&bytes).unwrap(), tiny());

    let mut magic = bytes.clone();
    magic[2] ^= 0xff;
    assert!(matches!(from_bytes(&magic), Err(DatasetError::Format(FormatError::BadMagic { .. }))));

    let version = patch_header(&bytes, "\"version\":1", "\"version\":7");
    assert!(matches!(from_bytes(&version), Err(DatasetError::Format(FormatError::VersionMismatch { found: 7, .. }))));

    let short = &bytes[..bytes.len() - 9];
    assert!(matches!(from_bytes(short), Err(DatasetError::Format(FormatError::Truncated { .. }))));

    let mut flipped = bytes.clone();
    let at = bytes.len() - 10;
    flipped[at] ^= 0x01;
    assert!(matches!(from_bytes(&flipped), Err(DatasetError::Format(FormatError::ChecksumMismatch { .. }))));

    // a header claiming more frames than the payload holds
    let longer = patch_header(&bytes, "[1,3,4,4]", "[1,4,4,4]");
    assert!(matches!(from_bytes(&longer), Err(DatasetError::Format(FormatError::Truncated { .. }))));

    // self-consistent container whose shape disagrees with the grid
    let grid = patch_header(&bytes, "\"nx\":4", "\"nx\":8");
    assert!(matches!(from_bytes(&grid), Err(DatasetError::Invalid(_))));
}
