use forgekit::aim::jitter_mask;
use forgekit::blend::{geometric_fallback_parsing, parsing_cut, self_blend, PartBlendConfig, SelfBlendConfig};
use forgekit::imagekit::{
    affine_warp, elastic_warp, gaussian_blur, masked_blend, resize, AffineParams, ElasticParams, ImageBuf, SoftMask,
};
use forgekit::srm::{noise_residual, summed_residual, SumMode};
use forgekit::SeedContext;
use proptest::prelude::*;

fn image(max: usize) -> impl Strategy<Value = ImageBuf> {
    (1..=max, 1..=max, prop::sample::select(vec![1usize, 3])).prop_flat_map(|(w, h, c)| {
        prop::collection::vec(0.0f64..=1.0, w * h * c).prop_map(move |d| ImageBuf::new(w, h, c, d).unwrap())
    })
}

fn mask_like(img: &ImageBuf) -> impl Strategy<Value = SoftMask> {
    let (w, h) = (img.width(), img.height());
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], w * h)
        .prop_map(move |d| SoftMask::new(w, h, d).unwrap())
}

fn pair() -> impl Strategy<Value = (ImageBuf, ImageBuf, SoftMask)> {
    image(10).prop_flat_map(|a| {
        let (w, h, c) = (a.width(), a.height(), a.channels());
        let b = prop::collection::vec(0.0f64..=1.0, w * h * c).prop_map(move |d| ImageBuf::new(w, h, c, d).unwrap());
        let m = mask_like(&a);
        (Just(a), b, m)
    })
}

proptest! {
    #[test]
    fn blend_stays_between_its_inputs((base, overlay, mask) in pair()) {
        let out = masked_blend(&base, &overlay, &mask).unwrap();
        let c = base.channels();
        for (i, v) in out.data().iter().enumerate() {
            let (b, o) = (base.data()[i], overlay.data()[i]);
            prop_assert!(b.min(o) <= *v && *v <= b.max(o));
            match mask.data()[i / c] {
                m if m == 0.0 => prop_assert_eq!(*v, b),
                m if m == 1.0 => prop_assert_eq!(*v, o),
                _ => {}
            }
        }
    }

    #[test]
    fn neutral_geometry_is_exact(img in image(12)) {
        prop_assert_eq!(&resize(&img, img.width(), img.height()), &img);
        prop_assert_eq!(&affine_warp(&img, &AffineParams::default()).unwrap(), &img);
        prop_assert_eq!(&gaussian_blur(&img, 0.0), &img);
        let still = elastic_warp(&img, &ElasticParams { alpha: 0.0, sigma: 2.0 }, &SeedContext::new(0, "e")).unwrap();
        prop_assert_eq!(&still, &img);
    }

    #[test]
    fn double_flip_is_identity(img in image(12)) {
        let flip = AffineParams::flip();
        let twice = affine_warp(&affine_warp(&img, &flip).unwrap(), &flip).unwrap();
        prop_assert_eq!(twice, img);
    }

    #[test]
    fn blur_keeps_constants(w in 1usize..12, h in 1usize..12, v in 0.0f64..=1.0, sigma in 0.1f64..4.0) {
        let img = ImageBuf::filled(w, h, 3, v).unwrap();
        prop_assert_eq!(gaussian_blur(&img, sigma), img);
    }

    #[test]
    fn jitter_mask_is_a_unit_band(img in image(8)) {
        let mask = SoftMask::from_gray(&forgekit::imagekit::to_gray(&img)).unwrap();
        let j = jitter_mask(&mask);
        for (m, v) in mask.data().iter().zip(j.data()) {
            prop_assert!((0.0..=1.0).contains(v));
            prop_assert!((v - 4.0 * m * (1.0 - m)).abs() <= 1e-15);
        }
    }

    #[test]
    fn residual_ignores_dyadic_offsets(w in 1usize..10, h in 1usize..10, offset in 0u32..=16, seed in any::<u64>()) {
        let mut state = seed | 1;
        let base: Vec<f64> = (0..w * h)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 49) as f64 / 64.0
            })
            .collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + offset as f64 / 64.0).collect();
        let a = noise_residual(&ImageBuf::new(w, h, 1, base).unwrap());
        let b = noise_residual(&ImageBuf::new(w, h, 1, shifted).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn residual_offsets_cancel_on_color_images(img in image(8), offset in 0.0f64..0.2) {
        let lifted = ImageBuf::new(
            img.width(), img.height(), img.channels(),
            img.data().iter().map(|v| (v * 0.8) + offset).collect(),
        ).unwrap();
        let scaled = ImageBuf::new(img.width(), img.height(), img.channels(), img.data().iter().map(|v| v * 0.8).collect()).unwrap();
        let a = noise_residual(&scaled);
        let b = noise_residual(&lifted);
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn residual_is_normalized_and_bounded(img in image(10)) {
        let raw = summed_residual(&img, SumMode::Signed);
        prop_assert!(raw.data.iter().all(|v| (-2.0..=2.0).contains(v)));
        let r = noise_residual(&img);
        prop_assert!(r.data.iter().all(|v| (0.0..=1.0).contains(v)));
        let distinct = raw.data.iter().any(|v| *v != raw.data[0]);
        if distinct {
            prop_assert!(r.data.contains(&0.0) && r.data.contains(&1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_leave_zero_mask_pixels_alone(seed in 0u64..10_000) {
        let size = 40;
        let s = SeedContext::new(seed, "gen");
        let mut rng_state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let img = ImageBuf::from_fn(size, size, 3, |_, _, _| {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state % 1000) as f64 / 999.0
        }).unwrap();
        let parsing = geometric_fallback_parsing(size, &s).unwrap();
        let mut config = SelfBlendConfig { assignment_mode: forgekit::blend::Assignment::SameImage, ..SelfBlendConfig::default() };
        config.mask_pipeline.blur_sigma_range = [0.5, 2.0];
        let checks = [
            self_blend(&img, &parsing, &config, &s).unwrap(),
            parsing_cut(&img, &parsing, &[1.0, 0.0, 0.5], &PartBlendConfig::default(), &s).unwrap(),
        ];
        for out in checks {
            for (i, &m) in out.mask.data().iter().enumerate() {
                if m == 0.0 {
                    prop_assert_eq!(&out.image.data()[i * 3..i * 3 + 3], &img.data()[i * 3..i * 3 + 3]);
                }
            }
        }
        prop_assert_eq!(self_blend(&img, &parsing, &SelfBlendConfig::neutral(), &s).unwrap().image, img);
    }
}
