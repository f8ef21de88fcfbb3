mod common;

use common::*;
use proptest::prelude::*;
use specdim::corpus::*;
use specdim::store::EmbeddingRecord;
use specdim::synthetic::SyntheticCorpus;
use specdim::FormatError;

fn records() -> Vec<EmbeddingRecord> {
    let mut r = random_records(3, 16, 11);
    r[0].snippet = Some("alpha beta".into());
    r[1].vector[0] = 1.0e-38;
    r[2].vector[1] = -3.4028235e38;
    r
}

#[test]
fn ten_line_document_boundaries() {
    let lines: Vec<String> = (0..10)
        .map(|i| (0..(10 + i * 7)).map(|t| format!("w{i}_{t}")).collect::<Vec<_>>().join(" "))
        .collect();
    let doc = lines.join("\n");
    let chunks = chunk_text("doc", &doc, &ChunkingConfig::default());
    // re-tokenize every chunk; boundaries must fall between whole lines
    let mut rebuilt = Vec::new();
    for c in &chunks {
        assert_eq!(c.token_count, c.text.split_whitespace().count());
        assert!(c.oversized || c.token_count <= 128, "{}", c.token_count);
        rebuilt.extend(c.text.split('\n').map(str::to_string));
    }
    assert_eq!(rebuilt, lines);
    assert!(chunks.len() > 1);
}

#[test]
fn mock_embed_is_unit_norm_and_deterministic() {
    for (i, text) in ["alpha", "alpha beta gamma", "The quick brown fox"].iter().enumerate() {
        let a = mock_embed(text, 768, i as u64).unwrap();
        let b = mock_embed(text, 768, i as u64).unwrap();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let n: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
    }
}

#[test]
fn disjoint_vocabularies_are_near_orthogonal() {
    let mut r = rng(99);
    let mut total = 0.0;
    for pair in 0..100 {
        let words = |prefix: &str, r: &mut rand_chacha::ChaCha8Rng| {
            use rand::Rng;
            (0..10).map(|_| format!("{prefix}{pair}x{}", r.random_range(0..1000))).collect::<Vec<_>>().join(" ")
        };
        let a = words("left", &mut r);
        let b = words("right", &mut r);
        total += cosine(&mock_embed(&a, 768, 1).unwrap(), &mock_embed(&b, 768, 1).unwrap()).abs();
    }
    let mean = total / 100.0;
    assert!(mean < 0.15, "mean |cos| = {mean}");
}

#[test]
fn two_topic_separability() {
    let corpus = SyntheticCorpus::standard();
    let recs = corpus.embed().unwrap();
    let labels = corpus.labels();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for a in &recs {
        for b in &recs {
            if a.id >= b.id {
                continue;
            }
            let c = cosine(&a.vector, &b.vector);
            if labels[&a.id] == labels[&b.id] {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                nx += 1;
            }
        }
    }
    let gap = intra / ni as f64 - inter / nx as f64;
    assert!(gap >= 0.3, "gap {gap}");
}

#[test]
fn bin_round_trip_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.bin");
    write_embeddings(&records(), &path, EmbeddingFormat::Bin).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"SEMB");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 16);
    assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 3);
    assert_eq!(read_embeddings(&path, EmbeddingFormat::Bin).unwrap(), records());
    let again = embeddings_to_bin(&embeddings_from_bin(&bytes).unwrap()).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    write_embeddings(&records(), &path, EmbeddingFormat::Jsonl).unwrap();
    assert_eq!(read_embeddings(&path, EmbeddingFormat::Jsonl).unwrap(), records());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(embeddings_to_jsonl(&parse_embeddings_jsonl(&text).unwrap()).unwrap(), text);
}

#[test]
fn empty_files_round_trip() {
    assert!(embeddings_from_bin(&embeddings_to_bin(&[]).unwrap()).unwrap().is_empty());
    assert!(parse_embeddings_jsonl("").unwrap().is_empty());
}

#[test]
fn bin_corruption_errors() {
    let good = embeddings_to_bin(&records()).unwrap();
    let mut bad = good.clone();
    bad[1] = b'Z';
    assert!(matches!(embeddings_from_bin(&bad), Err(CorpusError::Format(FormatError::BadMagic { .. }))));
    assert!(matches!(
        embeddings_from_bin(&good[..good.len() - 20]),
        Err(CorpusError::Format(FormatError::Truncated { .. }))
    ));
    let mut flipped = good.clone();
    flipped[30] ^= 1;
    assert!(matches!(
        embeddings_from_bin(&flipped),
        Err(CorpusError::Format(FormatError::ChecksumMismatch { .. }))
    ));
}

#[test]
fn write_rejects_mixed_dimensions() {
    let mut r = records();
    r[2].vector.pop();
    assert!(matches!(embeddings_to_bin(&r), Err(CorpusError::RecordDimension { id: 2, expected: 16, actual: 15 })));
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        read_embeddings(dir.path().join("nope.bin"), EmbeddingFormat::Bin),
        Err(CorpusError::Io { .. })
    ));
}

#[test]
fn chunk_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let chunks: Vec<ChunkRecord> = chunk_text("src", "a b\nc d e\nf", &ChunkingConfig::new(3, "\n").unwrap())
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| ChunkRecord { id: i as u64, chunk })
        .collect();
    write_chunks(&chunks, &path).unwrap();
    assert_eq!(read_chunks(&path).unwrap(), chunks);
}

fn unit_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::collection::vec("[a-z]{1,5}", 0..8).prop_map(|words| words.join(" ")),
        0..25,
    )
}

proptest! {
    #[test]
    fn chunking_respects_units(units in unit_strategy(), max_tokens in 1usize..12) {
        let source = units.join("\n");
        let chunks = chunk_text("s", &source, &ChunkingConfig::new(max_tokens, "\n").unwrap());
        let non_empty: Vec<&str> = source.split('\n').filter(|u| count_tokens(u) > 0).collect();
        let rebuilt: Vec<&str> = chunks.iter().flat_map(|c| c.text.split('\n')).collect();
        prop_assert_eq!(rebuilt, non_empty);
        for c in &chunks {
            prop_assert!(c.token_count >= 1);
            prop_assert_eq!(c.token_count, count_tokens(&c.text));
            if c.oversized {
                prop_assert!(!c.text.contains('\n') && c.token_count > max_tokens);
            } else {
                prop_assert!(c.token_count <= max_tokens);
            }
        }
    }

    #[test]
    fn jsonl_f32_exact(values in prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let rec = vec![EmbeddingRecord { id: 1, doc_key: "k".into(), snippet: None, vector: values }];
        let back = parse_embeddings_jsonl(&embeddings_to_jsonl(&rec).unwrap()).unwrap();
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back[0].vector), bits(&rec[0].vector));
    }

    #[test]
    fn mock_norm_is_one(words in prop::collection::vec("[a-z]{1,8}", 1..30), dim in 1usize..200, seed in any::<u64>()) {
        let v = mock_embed(&words.join(" "), dim, seed).unwrap();
        let n: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-6);
    }
}
