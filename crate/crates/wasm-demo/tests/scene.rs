use evdi_wasm_demo::{to_rgba, DemoScene, HEIGHT, WIDTH};

#[test]
fn deblur_beats_blur_at_true_theta() {
    let s = DemoScene::new(0.2, 250.0).unwrap();
    let blur = s.psnr(s.blur()).unwrap();
    let sharp = s.psnr(&s.deblur(0.2).unwrap()).unwrap();
    assert!(sharp > blur + 5.0, "{blur} -> {sharp}");
    assert_eq!(to_rgba(s.blur()).unwrap().len(), WIDTH * HEIGHT * 4);
}

#[test]
fn scrub_endpoints_and_middle() {
    let s = DemoScene::new(0.2, 250.0).unwrap();
    let mid = s.latent_at(0.2, 0.5).unwrap();
    let direct = s.deblur(0.2).unwrap();
    // 0.5 lands on mid-exposure up to a microsecond
    let gap = mid.data().iter().zip(direct.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 0.05, "{gap}");
    assert!(s.latent_at(0.2, 0.0).is_ok() && s.latent_at(0.2, 1.0).is_ok());
}

#[test]
fn loss_curve_dips_near_truth() {
    let s = DemoScene::new(0.3, 250.0).unwrap();
    let curve = s.loss_curve(0.1, 0.6, 11).unwrap();
    let best = (0..curve.len()).min_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
    let t_best = 0.1 + 0.05 * best as f64;
    assert!((t_best - 0.3).abs() <= 0.05, "{curve:?}");
    assert!((s.fit_theta().unwrap() - 0.3).abs() < 0.03);
}
