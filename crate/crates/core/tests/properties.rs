use proptest::prelude::*;
use xorsplit_core::kn::{block23_from_pieces, general_from_share23, pieces_from_block23, share23_from_general};
use xorsplit_core::*;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn block_and_rand(octets: usize) -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (
        proptest::collection::vec(any::<u8>(), octets),
        proptest::collection::vec(any::<u8>(), octets),
    )
}

fn sized_block() -> impl Strategy<Value = (u32, Vec<u8>, Vec<u8>)> {
    prop_oneof![Just(8u32), Just(16), Just(64), Just(256), Just(2048)]
        .prop_flat_map(|bits| block_and_rand(bits as usize / 8).prop_map(move |(s, r)| (bits, s, r)))
}

proptest! {
    #[test]
    fn roundtrip_23_all_pairs((bits, s, r) in sized_block()) {
        let secret = Block::new(BlockBits::new(bits).unwrap(), s).unwrap();
        let shares = share23(&secret, &SharingRandomness::from_bytes(r)).unwrap();
        for (i, j) in PAIRS {
            prop_assert_eq!(&reconstruct23(&shares[i], &shares[j]).unwrap(), &secret);
        }
    }

    #[test]
    fn sharing_is_deterministic((bits, s, r) in sized_block()) {
        let secret = Block::new(BlockBits::new(bits).unwrap(), s).unwrap();
        let rand = SharingRandomness::from_bytes(r);
        prop_assert_eq!(share23(&secret, &rand).unwrap(), share23(&secret, &rand).unwrap());
    }

    #[test]
    fn tamper_changes_every_pair_containing_share(
        (s, r) in block_and_rand(32),
        victim in 0usize..3,
        bit in 0usize..256,
    ) {
        let secret = Block::new(BlockBits::new(256).unwrap(), s).unwrap();
        let mut shares = share23(&secret, &SharingRandomness::from_bytes(r)).unwrap();
        shares[victim].data[bit / 8] ^= 1 << (bit % 8);
        for (i, j) in PAIRS {
            let got = reconstruct23(&shares[i], &shares[j]).unwrap();
            if i == victim || j == victim {
                prop_assert_ne!(&got, &secret);
            } else {
                prop_assert_eq!(&got, &secret);
            }
        }
    }

    #[test]
    fn general_path_agrees_with_block_path((s, r) in block_and_rand(16)) {
        let bits = BlockBits::new(128).unwrap();
        let params = ThresholdParams::with_prime(2, 3, 3, 64).unwrap();
        let secret = Block::new(bits, s).unwrap();
        let rand = SharingRandomness::from_bytes(r.clone());

        // block shares decoded by the general matrix
        let shares = share23(&secret, &rand).unwrap();
        let general: Vec<GeneralShare> = shares.iter().map(|s| general_from_share23(s).unwrap()).collect();
        for (i, j) in PAIRS {
            let pieces = reconstruct_kn(&[general[i].clone(), general[j].clone()], &params).unwrap();
            prop_assert_eq!(&block23_from_pieces(&pieces).unwrap(), &secret);
        }

        // general shares with pads (R1, R2) are byte-identical to block shares
        let mut pads = r.clone();
        pads.extend_from_slice(&[0u8; 8]);
        let pads = RandomPadMatrix::from_bytes(&params, pads).unwrap();
        let from_general = share_kn(&pieces_from_block23(&secret).unwrap(), &params, &pads).unwrap();
        for (g, b) in from_general.iter().zip(&shares) {
            prop_assert_eq!(&share23_from_general(g), b);
        }
    }

    #[test]
    fn general_roundtrip_grid(seed in any::<u64>(), which in 0usize..3) {
        use rand::{RngExt, SeedableRng};
        let (k, n, p) = [(2, 3, 3), (2, 4, 5), (3, 5, 5)][which];
        let params = ThresholdParams::with_prime(k, n, p, 24).unwrap();
        let mut rng = rand::rngs::ChaCha20Rng::seed_from_u64(seed);
        let mut bytes = vec![0u8; params.secret_octets()];
        rng.fill(&mut bytes[..]);
        let secret = PieceVector::from_bytes(&params, bytes).unwrap();
        let pads = RandomPadMatrix::generate(&params, &mut rng).unwrap();
        let shares = share_kn(&secret, &params, &pads).unwrap();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k { continue; }
            let chosen: Vec<_> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| shares[i].clone()).collect();
            prop_assert_eq!(&reconstruct_kn(&chosen, &params).unwrap(), &secret);
        }
    }

    #[test]
    fn file_roundtrip_any_length(len in 0usize..65536, seed in any::<u64>(), pair in 0usize..3) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand::rngs::ChaCha20Rng::seed_from_u64(seed);
        let mut data = vec![0u8; len];
        rng.fill(&mut data[..]);
        let scheme = SharingScheme::two_of_three(BlockBits::DEFAULT).unwrap();
        let shared = share_file(&data, &scheme, &mut rng).unwrap();
        let total: usize = shared.shares.iter().map(|s| s.payload.len()).sum();
        prop_assert_eq!(total, 3 * scheme.padded_len(len));
        let (i, j) = PAIRS[pair];
        let back = reconstruct_file(&[&shared.shares[i], &shared.shares[j]], &scheme, len).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn split_merge_identity(data in proptest::collection::vec(any::<u8>(), 0..5000), chunk in 1usize..700, extra in 0usize..700) {
        let plan = ChunkPlan::new(chunk + extra, chunk).unwrap();
        let chunks = split(&data, &plan);
        let tagged = chunks.iter().map(|c| (c.tag, c.data.to_vec())).rev().collect();
        prop_assert_eq!(merge(tagged).unwrap(), data);
    }
}

/// Each share is uniform over the randomness and independent of the secret.
#[test]
fn perfect_secrecy_exhaustive_d8() {
    let bits = BlockBits::new(8).unwrap();
    for sc in 0..=255u8 {
        let secret = Block::new(bits, vec![sc]).unwrap();
        let mut counts = [[0u32; 256]; 3];
        for r in 0..=255u8 {
            let shares = share23(&secret, &SharingRandomness::from_bytes(vec![r])).unwrap();
            for (i, s) in shares.iter().enumerate() {
                counts[i][s.data[0] as usize] += 1;
            }
        }
        for c in counts {
            assert!(c.iter().all(|&v| v == 1), "secret {sc:#x} not uniform");
        }
    }
}
