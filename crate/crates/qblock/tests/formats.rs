use num_complex::Complex64;
use proptest::prelude::*;
use qblock::cli::seeded_key;
use qblock::format::{
    from_json, key_from_json, key_to_json, to_json, transmission_from_json, transmission_to_json, AttackFile, StateFile,
};
use qblock_core::adversary::detection_experiment;
use qblock_core::modes::{mode1_encrypt, mode2_encrypt, Mode, ModeConfig};
use qblock_core::{BitString, PlainBlock, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state_strategy() -> impl Strategy<Value = StateVector> {
    (1usize..=6).prop_flat_map(|n| {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("zero vector", move |raw| {
            let norm = raw.iter().map(|(re, im)| re * re + im * im).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            let amps = raw.iter().map(|&(re, im)| Complex64::new(re / norm, im / norm)).collect();
            StateVector::from_amplitudes(n, amps).ok()
        })
    })
}

proptest! {
    #[test]
    fn statevectors_round_trip_bit_exactly(state in state_strategy()) {
        let text = to_json(&StateFile::from(&state)).unwrap();
        let back = StateVector::try_from(&from_json::<StateFile>(&text).unwrap()).unwrap();
        for (a, b) in state.amplitudes().iter().zip(back.amplitudes()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        prop_assert_eq!(to_json(&StateFile::from(&back)).unwrap(), text);
    }

    #[test]
    fn keys_round_trip(seed in any::<u64>(), n in 2usize..=12, grid in 2u32..=512, pairing in any::<bool>()) {
        let key = seeded_key(n, grid, pairing, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let text = key_to_json(&key).unwrap();
        let back = key_from_json(&text).unwrap();
        prop_assert_eq!(&back, &key);
        prop_assert_eq!(key_to_json(&back).unwrap(), text);
    }
}

#[test]
fn transmissions_round_trip_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let key = seeded_key(5, 256, true, &mut rng).unwrap();
    let blocks: Vec<PlainBlock> =
        ["10110", "00000", "11111"].iter().map(|b| PlainBlock::new(b.parse::<BitString>().unwrap())).collect();
    let m1 = mode1_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode1Measured), &mut rng).unwrap();
    let m2 = mode2_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode2Entangling)).unwrap();
    for t in [m1, m2] {
        let text = transmission_to_json(&t).unwrap();
        assert_eq!(transmission_from_json(&text).unwrap(), t);
    }
}

#[test]
fn mode1_payload_interleaves_carriers() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let key = seeded_key(4, 256, false, &mut rng).unwrap();
    let blocks = vec![PlainBlock::new(BitString::zeros(4)); 3];
    let t = mode1_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode1Measured), &mut rng).unwrap();
    let file: serde_json::Value = serde_json::from_str(&transmission_to_json(&t).unwrap()).unwrap();
    let tags: Vec<(&str, u64)> = file["payload"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["mode"].as_str().unwrap(), e["block_index"].as_u64().unwrap()))
        .collect();
    assert_eq!(tags, [("m1", 1), ("m1-iv", 2), ("m1", 2), ("m1-iv", 3), ("m1", 3)]);
    assert_eq!(file["iv_public"], false);
    assert_eq!(file["m"], 3);
}

#[test]
fn reordered_payload_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let key = seeded_key(4, 256, false, &mut rng).unwrap();
    let blocks = vec![PlainBlock::new(BitString::zeros(4)); 2];
    let t = mode1_encrypt(&key, &blocks, &ModeConfig::from_key(&key, Mode::Mode1Measured), &mut rng).unwrap();
    let mut file: serde_json::Value = serde_json::from_str(&transmission_to_json(&t).unwrap()).unwrap();
    file["payload"].as_array_mut().unwrap().swap(0, 1);
    assert!(transmission_from_json(&file.to_string()).is_err());
}

#[test]
fn attack_reports_keep_exact_integers_as_strings() {
    let b = qblock_core::adversary::config_count_bounds(40, 50).unwrap().report();
    let file = AttackFile::from(&b);
    let text = to_json(&file).unwrap();
    assert!(text.contains(&format!("\"upper\":\"{}\"", b.exact_value("upper").unwrap())));
    let back: AttackFile = from_json(&text).unwrap();
    assert_eq!(back.exact_value("lower").as_ref(), b.exact_value("lower"));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let key = seeded_key(4, 256, false, &mut rng).unwrap();
    let r = detection_experiment(&key, &PlainBlock::new(BitString::zeros(4)), 2, true, 50, &mut rng).unwrap();
    let back: AttackFile = from_json(&to_json(&AttackFile::from(&r)).unwrap()).unwrap();
    assert_eq!(back, AttackFile::from(&r));
    for e in back.estimates.values() {
        assert!((0.0..=1.0).contains(&e.value));
    }
    assert!(back.counts["flagged"] <= back.trials);
}
