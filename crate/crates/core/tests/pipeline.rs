use std::f64::consts::PI;

use evdi::calibrate::consistency_loss;
use evdi::dataio;
use evdi::integrator::{edi_deblur, reconstruct_box_frames};
use evdi::metrics::psnr;
use evdi::simulator::{events_from_frames, render_dataset, Frame, FrameSequence, SimulatorConfig, DEFAULT_LOG_FLOOR};
use evdi::{ColorMode, Dataset, Domain, Event, EventStream, ImageBuffer, ThresholdConfig};
use proptest::prelude::*;

fn drifting(n: u64, speed: f64) -> FrameSequence {
    let frames = (0..n)
        .map(|k| {
            let shift = speed * k as f64 * 1e-3;
            let img = ImageBuffer::from_fn(64, 48, 1, Domain::Linear, |x, y, _| {
                let u = x as f64 - shift;
                0.5 + 0.3 * (2.0 * PI * u / 19.0).sin() + 0.1 * (2.0 * PI * y as f64 / 13.0).cos()
            })
            .unwrap();
            Frame::new(k * 1000, img)
        })
        .collect();
    FrameSequence::new(frames).unwrap()
}

#[test]
fn rendered_dataset_reloads_and_deblurs() {
    let dir = tempfile::tempdir().unwrap();
    let seq = drifting(240, 200.0);
    let cfg = SimulatorConfig::new(ThresholdConfig::symmetric(0.2).unwrap(), ColorMode::Mono);
    let m = render_dataset(&seq, 40_000, 40_000, &cfg, dir.path()).unwrap();
    assert_eq!(m.views.len(), 6);

    let ds = Dataset::load(&dir.path().join("manifest.json")).unwrap();
    let direct = events_from_frames(&seq, &cfg).unwrap();
    assert_eq!(ds.events.events(), direct.events());
    let reread = dataio::read_events(&dir.path().join("events.evt1"), Some((64, 48))).unwrap();
    assert_eq!(reread.events(), direct.events());

    let v = &ds.views[3];
    let sharp = v.sharp.as_ref().unwrap();
    let latent = edi_deblur(&v.blur, &ds.events, v.t_mid, ds.tau(), ds.thresholds, ColorMode::Mono).unwrap();
    let before = psnr(&v.blur, sharp).unwrap();
    let after = psnr(&latent.clamped(0.0, 1.0), sharp).unwrap();
    assert!(after > before + 3.0, "{before:.2} -> {after:.2}");
}

#[test]
fn loss_is_lower_at_the_recording_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let seq = drifting(240, 200.0);
    let cfg = SimulatorConfig::new(ThresholdConfig::symmetric(0.2).unwrap(), ColorMode::Mono);
    render_dataset(&seq, 40_000, 40_000, &cfg, dir.path()).unwrap();
    let ds = Dataset::load(&dir.path().join("manifest.json")).unwrap();
    let loss = |t: f64| consistency_loss(&ds, ThresholdConfig::symmetric(t).unwrap(), DEFAULT_LOG_FLOOR).unwrap();
    let at = loss(0.2);
    assert!(at < loss(0.1) && at < loss(0.4), "{} {at} {}", loss(0.1), loss(0.4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn box_frames_average_to_blur(
        raw in prop::collection::vec((0u64..12_000, 0u16..5, 0u16..4, any::<bool>()), 0..80),
        theta in 0.05f64..0.6,
        n in 1usize..9,
        level in 0.05f64..0.95,
    ) {
        let events = raw.iter().map(|&(t, x, y, p)| Event::new(t, x, y, if p { 1 } else { -1 })).collect();
        let stream = EventStream::build(events, 5, 4).unwrap();
        let blur = ImageBuffer::from_fn(5, 4, 1, Domain::Linear, |x, y, _| level + 0.01 * (x + y) as f64).unwrap();
        let thr = ThresholdConfig::symmetric(theta).unwrap();
        let frames = reconstruct_box_frames(&blur, &stream, 6_000, 10_000, thr, ColorMode::Mono, n).unwrap();
        for i in 0..blur.data().len() {
            let mean = frames.iter().map(|f| f.data()[i]).sum::<f64>() / n as f64;
            prop_assert!((mean - blur.data()[i]).abs() <= 1e-9 * blur.data()[i], "pixel {i}: {mean}");
        }
    }
}
