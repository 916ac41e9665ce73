//! Compares the data-parallel batch map against its sequential twin on the
//! three per-utterance workloads the pipeline fans out: pitch extraction,
//! autoencoder reconstruction, and classifier inference.
//!
//! `run_batch` uses the rayon pool when the default `parallel` feature is on
//! and degrades to a plain map without it; `run_batch_serial` is always
//! sequential, so benching both inside one binary shows the speedup (or, with
//! the feature off, that the two paths coincide).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emofactor::batch::{run_batch, run_batch_serial};
use emofactor::dsp::mel::{MelSpectrogram, N_MELS};
use emofactor::dsp::pitch::{extract_pitch, PitchContour};
use emofactor::dsp::resample::RrConfig;
use emofactor::dsp::{FrontendConfig, Waveform};
use emofactor::flow::{
    decode, encode, mask_inputs, reconstruction_loss, FactorMask, SpeechFlowConfig,
    SpeechFlowModel,
};
use emofactor::ser::{acrnn_forward, make_acrnn_input, AcrnnConfig, AcrnnModel};
use emofactor::timbre::{TimbreConfig, TimbreModel};

/// Harmonic tone with vibrato and noise: enough structure that the pitch
/// tracker does real work.
fn synth_waveform(seconds: f64, f0: f64, seed: u64) -> Waveform {
    let sr = 16_000u32;
    let n = (seconds * sr as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let f = f0 * (1.0 + 0.03 * (2.0 * std::f64::consts::PI * 5.0 * t).sin());
            let phase = 2.0 * std::f64::consts::PI * f * t;
            0.5 * phase.sin() + 0.25 * (2.0 * phase).sin() + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    Waveform {
        samples,
        sample_rate: sr,
    }
}

fn random_mel(t: usize, rng: &mut ChaCha8Rng) -> MelSpectrogram {
    let frames = ndarray::Array2::from_shape_fn((t, N_MELS), |_| rng.gen_range(-15.0..2.0));
    MelSpectrogram::new(frames, 0.016, 16_000)
}

fn random_pitch(t: usize, rng: &mut ChaCha8Rng) -> PitchContour {
    let mut f0 = vec![0.0; t];
    let mut voiced = vec![false; t];
    for i in 0..t {
        if rng.gen_bool(0.8) {
            voiced[i] = true;
            f0[i] = rng.gen_range(-1.5..1.5);
        }
    }
    PitchContour {
        f0,
        voiced,
        hop_secs: 0.016,
        normalized: true,
    }
}

fn bench_pitch_extraction(c: &mut Criterion) {
    let cfg = FrontendConfig::default();
    let waves: Vec<Waveform> = (0..24)
        .map(|i| synth_waveform(0.5, 120.0 + 10.0 * i as f64, i as u64))
        .collect();
    let work = |w: &Waveform| extract_pitch(w, &cfg).expect("valid waveform").f0.len();

    let mut group = c.benchmark_group("pitch_extraction");
    group.throughput(Throughput::Elements(waves.len() as u64));
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("run_batch", waves.len()), &waves, |b, ws| {
        b.iter(|| run_batch(ws, work))
    });
    group.bench_with_input(
        BenchmarkId::new("run_batch_serial", waves.len()),
        &waves,
        |b, ws| b.iter(|| run_batch_serial(ws, work)),
    );
    group.finish();
}

fn bench_flow_reconstruction(c: &mut Criterion) {
    let timbre = TimbreModel::new(
        (0..4).map(|i| format!("spk{i}")).collect(),
        TimbreConfig {
            d_t: 16,
            hidden: 16,
            ..TimbreConfig::default()
        },
    );
    let flow_config = SpeechFlowConfig {
        d_c: 8,
        d_r: 2,
        d_f: 8,
        d_t: 16,
        down_c: 4,
        down_r: 4,
        down_f: 4,
        enc_hidden: 16,
        dec_hidden: 24,
        n_layers: 1,
        rr: RrConfig {
            seg_min: 8,
            seg_max: 14,
            alpha_min: 0.7,
            alpha_max: 1.3,
        },
        ..SpeechFlowConfig::default()
    };
    let model = SpeechFlowModel::new(flow_config, timbre).expect("valid config");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs: Vec<(MelSpectrogram, PitchContour)> = (0..24)
        .map(|_| {
            let t = rng.gen_range(30..50);
            (random_mel(t, &mut rng), random_pitch(t, &mut rng))
        })
        .collect();

    let work = |(mel, pitch): &(MelSpectrogram, PitchContour)| {
        let inputs = mask_inputs(mel, pitch, FactorMask::full()).expect("aligned inputs");
        let bundle = encode(&inputs, mel, &model, None).expect("encode");
        let rebuilt = decode(&bundle, mel.n_frames(), &model).expect("decode");
        reconstruction_loss(mel, &rebuilt).expect("same shape").per_entry
    };

    let mut group = c.benchmark_group("flow_reconstruction");
    group.throughput(Throughput::Elements(pairs.len() as u64));
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("run_batch", pairs.len()), &pairs, |b, ps| {
        b.iter(|| run_batch(ps, work))
    });
    group.bench_with_input(
        BenchmarkId::new("run_batch_serial", pairs.len()),
        &pairs,
        |b, ps| b.iter(|| run_batch_serial(ps, work)),
    );
    group.finish();
}

fn bench_classifier_inference(c: &mut Criterion) {
    let config = AcrnnConfig {
        conv_channels: 8,
        fc_dim: 16,
        lstm_hidden: 32,
        attn_dim: 16,
        ..AcrnnConfig::default()
    };
    let model = AcrnnModel::new(config, "raw").expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs: Vec<_> = (0..24)
        .map(|_| {
            let t = rng.gen_range(30..50);
            make_acrnn_input(&random_mel(t, &mut rng)).expect("enough frames")
        })
        .collect();

    let work = |x: &emofactor::ser::AcrnnInput| {
        acrnn_forward(x, &model).expect("forward").predicted()
    };

    let mut group = c.benchmark_group("classifier_inference");
    group.throughput(Throughput::Elements(inputs.len() as u64));
    group.sample_size(10);
    group.bench_with_input(
        BenchmarkId::new("run_batch", inputs.len()),
        &inputs,
        |b, xs| b.iter(|| run_batch(xs, work)),
    );
    group.bench_with_input(
        BenchmarkId::new("run_batch_serial", inputs.len()),
        &inputs,
        |b, xs| b.iter(|| run_batch_serial(xs, work)),
    );
    group.finish();
}

criterion_group!(
    benches,
    bench_pitch_extraction,
    bench_flow_reconstruction,
    bench_classifier_inference
);
criterion_main!(benches);
