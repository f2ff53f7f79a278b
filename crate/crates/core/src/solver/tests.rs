use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geom::{build_tree, shapes};
use crate::kernels::{KernelSpec, Layer, SelfInteraction};
use crate::linalg::{rel_diff, Lu, Mat};
use crate::scalar::Scalar;
use crate::skel::{compress, Block, CompressOptions, CompressedMatrix, KernelOperator, Level};

fn random_vec<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::from_parts(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn random_mat(rng: &mut ChaCha8Rng, m: usize, n: usize, scale: f64) -> Mat<f64> {
    Mat::from_fn(m, n, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Second-kind double layer on the unit circle.
fn circle_double_layer<T: Scalar>(n: usize, eps: f64) -> (KernelOperator, CompressedMatrix<T>) {
    let spec = KernelSpec::laplace(2, Layer::Double).with_self_interaction(SelfInteraction::CurvatureLimit);
    let op = KernelOperator::new(spec, shapes::circle(n))
        .unwrap()
        .with_identity(Complex64::new(-0.5, 0.0));
    let tree = build_tree(op.points(), 32).unwrap();
    let cm = compress(&op, &tree, &CompressOptions::new(eps)).unwrap();
    (op, cm)
}

/// Two-level block-separable matrix with random factors, built directly.
fn synthetic(seed: u64) -> CompressedMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nb1, n1, k1) = (8, 16, 5);
    let n = nb1 * n1;
    // Scramble the original numbering to exercise the gather/scatter.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut blocks = Vec::new();
    for b in 0..nb1 {
        let idx = order[b * n1..(b + 1) * n1].to_vec();
        let skel: Vec<usize> = idx.iter().step_by(3).take(k1).copied().collect();
        let mut d = random_mat(&mut rng, n1, n1, 0.3);
        d.add_diag(4.0);
        blocks.push(Block {
            node: b,
            rows: idx.clone(),
            cols: idx,
            row_skel: skel.clone(),
            col_skel: skel,
            d,
            l: random_mat(&mut rng, n1, k1, 1.0),
            r: random_mat(&mut rng, k1, n1, 1.0),
            pass: false,
        });
    }
    let lvl1 = Level { blocks };
    let skel1: Vec<usize> = lvl1.blocks.iter().flat_map(|b| b.row_skel.clone()).collect();
    let (nb2, k2) = (2, 6);
    let n2 = skel1.len() / nb2;
    let mut blocks = Vec::new();
    for b in 0..nb2 {
        let idx = skel1[b * n2..(b + 1) * n2].to_vec();
        let skel: Vec<usize> = idx[..k2].to_vec();
        blocks.push(Block {
            node: 100 + b,
            rows: idx.clone(),
            cols: idx,
            row_skel: skel.clone(),
            col_skel: skel,
            d: random_mat(&mut rng, n2, n2, 0.2),
            l: random_mat(&mut rng, n2, k2, 0.5),
            r: random_mat(&mut rng, k2, n2, 0.5),
            pass: false,
        });
    }
    let lvl2 = Level { blocks };
    let top: Vec<usize> = lvl2.blocks.iter().flat_map(|b| b.row_skel.clone()).collect();
    let mut s = random_mat(&mut rng, top.len(), top.len(), 0.2);
    crate::skel::zero_diagonal_blocks(&mut s, [(k2, k2), (k2, k2)]);
    CompressedMatrix::from_parts(n, 0.0, order, vec![lvl1, lvl2], top.clone(), top, s).unwrap()
}

#[test]
fn diagonal_matrix_inverts_exactly() {
    let blocks: Vec<Block<f64>> = (0..2)
        .map(|i| Block {
            node: i,
            rows: vec![i],
            cols: vec![i],
            row_skel: vec![],
            col_skel: vec![],
            d: Mat::diag(&[[2.0, 3.0][i]]),
            l: Mat::zeros(1, 0),
            r: Mat::zeros(0, 1),
            pass: false,
        })
        .collect();
    let cm = CompressedMatrix::from_parts(2, 0.0, vec![0, 1], vec![Level { blocks }], vec![], vec![], Mat::zeros(0, 0))
        .unwrap();
    let fi = factor(&cm).unwrap();
    assert_eq!(fi.solve(&[4.0, 9.0]).unwrap(), vec![2.0, 3.0]);
    assert!(fi.solve(&[1.0]).is_err());
}

#[test]
fn synthetic_matches_dense_inverse() {
    for seed in 0..3 {
        let cm = synthetic(seed);
        let dense = cm.to_dense();
        let lu = Lu::factor(&dense).unwrap();
        let fi = factor(&cm).unwrap();
        assert!(fi.warnings().is_empty());
        for s in 0..3 {
            let b = random_vec::<f64>(cm.size(), 10 + s);
            let err = rel_diff(&fi.solve(&b).unwrap(), &lu.solve(&b));
            assert!(err <= 1e-10, "seed {seed}: {err}");
        }
        // The embedding is an independent route to the same answer.
        let b = random_vec::<f64>(cm.size(), 77);
        let err = rel_diff(&solve_via_embedding_dense(&cm, &b).unwrap(), &lu.solve(&b));
        assert!(err <= 1e-10, "{err}");
    }
}

#[test]
fn circle_second_kind_solve() {
    let (_, cm) = circle_double_layer::<f64>(512, 1e-9);
    assert!(cm.num_levels() >= 2);
    let fi = factor(&cm).unwrap();
    assert!(fi.warnings().is_empty(), "{:?}", fi.warnings());
    let b = random_vec::<f64>(512, 1);
    let x = fi.solve(&b).unwrap();
    let res = rel_diff(&cm.apply(&x).unwrap(), &b);
    assert!(res <= 1e-8, "{res}");
    assert!(fi.solve(&vec![0.0; 512]).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn complex_helmholtz_solve() {
    let spec = KernelSpec::helmholtz(2, Layer::Double, 6.0);
    let op = KernelOperator::new(spec, shapes::circle(400))
        .unwrap()
        .with_identity(Complex64::new(-0.5, 0.0));
    let tree = build_tree(op.points(), 32).unwrap();
    let cm: CompressedMatrix<Complex64> = compress(&op, &tree, &CompressOptions::new(1e-10)).unwrap();
    let fi = factor(&cm).unwrap();
    let b = random_vec::<Complex64>(400, 2);
    let x = fi.solve(&b).unwrap();
    assert!(rel_diff(&cm.apply(&x).unwrap(), &b) <= 1e-9);
    let y = solve_via_embedding_dense(&cm, &b).unwrap();
    assert!(rel_diff(&x, &y) <= 1e-9);
}

#[test]
fn regularization_shifts_finest_blocks() {
    let cm = synthetic(4);
    let fi = factor_with(&cm, &FactorOptions { regularize: Some(0.5) }).unwrap();
    let mut dense = cm.to_dense();
    dense.add_diag(0.5);
    let b = random_vec::<f64>(cm.size(), 5);
    assert!(rel_diff(&fi.solve(&b).unwrap(), &Lu::factor(&dense).unwrap().solve(&b)) <= 1e-10);
    assert!(factor_with(&cm, &FactorOptions { regularize: Some(f64::NAN) }).is_err());
}

#[test]
fn singular_block_is_reported() {
    let mut cm = synthetic(1);
    cm.levels[0].blocks[3].d = Mat::zeros(16, 16);
    match factor(&cm) {
        Err(crate::Error::SingularBlock { what, level, node }) => {
            assert_eq!((what, level, node), ("diagonal", 1, 3));
        }
        other => panic!("expected a singular block, got {other:?}"),
    }
}

#[test]
fn embedding_layout() {
    let cm = synthetic(2);
    let se = assemble_embedding(&cm);
    let extra: usize = cm.levels().iter().map(|l| l.k_rows() + l.k_cols()).sum();
    assert_eq!(se.dim(), cm.size() + extra);
    assert_eq!(se.original_size(), cm.size());
    let kinds: Vec<(BlockKind, usize)> = se.blocks().iter().map(|b| (b.kind, b.level)).collect();
    assert_eq!(kinds.last(), Some(&(BlockKind::S, 3)));
    assert!(kinds.contains(&(BlockKind::Coupling, 2)));

    // Lifting x through the coupling rows reproduces Ãx in the first block row
    // and zeros elsewhere.
    let x = random_vec::<f64>(cm.size(), 8);
    let v = SparseEmbedding::lift(&cm, &x).unwrap();
    let out = se.matvec(&v).unwrap();
    let ax = cm.apply(&x).unwrap();
    assert!(rel_diff(&out[..cm.size()], &ax) <= 1e-13);
    let tail = crate::linalg::norm2(&out[cm.size()..]);
    assert!(tail <= 1e-13 * crate::linalg::norm2(&ax), "{tail}");
}

#[test]
fn embedding_one_level_and_degenerate() {
    // One level: N = 100, ten blocks with one skeleton each.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let blocks: Vec<Block<f64>> = (0..10)
        .map(|b| {
            let idx: Vec<usize> = (10 * b..10 * b + 10).collect();
            Block {
                node: b,
                row_skel: vec![idx[0]],
                col_skel: vec![idx[0]],
                rows: idx.clone(),
                cols: idx,
                d: random_mat(&mut rng, 10, 10, 1.0),
                l: random_mat(&mut rng, 10, 1, 1.0),
                r: random_mat(&mut rng, 1, 10, 1.0),
                pass: false,
            }
        })
        .collect();
    let top: Vec<usize> = (0..10).map(|b| 10 * b).collect();
    let mut s = random_mat(&mut rng, 10, 10, 1.0);
    crate::skel::zero_diagonal_blocks(&mut s, [(1, 1); 10]);
    let cm = CompressedMatrix::from_parts(100, 0.0, (0..100).collect(), vec![Level { blocks }], top.clone(), top, s)
        .unwrap();
    let se = assemble_embedding(&cm);
    assert_eq!(se.dim(), 120);
    // Pattern [D L 0; R 0 -I; 0 -I S].
    let dense = se.to_dense().unwrap();
    for (i, j, _) in se.triplets() {
        let (bi, bj) = (i / 100 + (i >= 110) as usize, j / 100 + (j >= 110) as usize);
        assert!(matches!((bi, bj), (0, 0) | (0, 1) | (1, 0) | (1, 2) | (2, 1) | (2, 2)), "({i}, {j})");
    }
    assert_eq!(dense[(100, 110)], -1.0);
    assert_eq!(dense[(110, 100)], -1.0);

    // No levels: the embedding is the matrix itself.
    let op = KernelOperator::new(KernelSpec::laplace(2, Layer::Single), shapes::circle(30)).unwrap();
    let tree = build_tree(op.points(), 64).unwrap();
    let cm: CompressedMatrix<f64> = compress(&op, &tree, &CompressOptions::new(1e-6)).unwrap();
    let se = assemble_embedding(&cm);
    assert_eq!(se.dim(), 30);
    assert_eq!(se.to_dense().unwrap(), op.dense::<f64>());
}

#[test]
fn embedding_dense_solve_matches_direct() {
    let (_, cm) = circle_double_layer::<f64>(512, 1e-9);
    let se = assemble_embedding(&cm);
    let dense = cm.to_dense();
    let lu = Lu::factor(&dense).unwrap();
    for s in 0..5 {
        let b = random_vec::<f64>(512, 20 + s);
        let err = rel_diff(&se.solve_dense(&b).unwrap(), &lu.solve(&b));
        assert!(err <= 1e-10, "{err}");
    }
}

#[test]
fn matrix_market_identity() {
    let se = SparseEmbedding::from_triplets(2, 2, vec![1, 0], vec![1, 0], vec![1.0f64, 1.0]).unwrap();
    let mut buf = Vec::new();
    write_matrix_market(&se, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with("% ")).collect();
    assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
    assert_eq!(lines[1], "2 2 2");
    let entry = |l: &str| {
        let f: Vec<&str> = l.split_whitespace().collect();
        (f[0].parse::<usize>().unwrap(), f[1].parse::<usize>().unwrap(), f[2].parse::<f64>().unwrap())
    };
    assert_eq!(entry(lines[2]), (1, 1, 1.0));
    assert_eq!(entry(lines[3]), (2, 2, 1.0));
}

fn sorted<T: Scalar>(se: &SparseEmbedding<T>) -> Vec<(usize, usize, T)> {
    let mut t: Vec<_> = se.triplets().collect();
    t.sort_by_key(|&(i, j, _)| (j, i));
    t
}

#[test]
fn matrix_market_round_trip() {
    let cm = synthetic(6);
    let se = assemble_embedding(&cm);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.mtx");
    export_matrix_market(&se, &path).unwrap();
    let back: SparseEmbedding<f64> = import_matrix_market(&path).unwrap();
    assert_eq!((back.dim(), back.original_size()), (se.dim(), se.original_size()));
    assert_eq!(sorted(&back), sorted(&se));

    let c = SparseEmbedding::from_triplets(
        1,
        2,
        vec![0, 1, 0],
        vec![0, 0, 1],
        vec![Complex64::new(0.1, -1.0 / 3.0), Complex64::new(1e-300, 2.5), Complex64::new(-7.0, 0.0)],
    )
    .unwrap();
    let mut buf = Vec::new();
    write_matrix_market(&c, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate complex general"));
    assert_eq!(text.lines().last().unwrap().split_whitespace().count(), 4);
    let back: SparseEmbedding<Complex64> = read_matrix_market(&buf[..]).unwrap();
    assert_eq!(sorted(&back), sorted(&c));
    assert!(read_matrix_market::<f64, _>(&buf[..]).is_err());
    assert!(read_matrix_market::<f64, _>(&b"%%MatrixMarket matrix array real general\n"[..]).is_err());
}

#[test]
fn gmres_identity_and_diagonal() {
    let b = random_vec::<f64>(20, 1);
    let out = gmres(|v: &[f64]| v.to_vec(), &b, 1e-12, 50, None::<fn(&[f64]) -> Vec<f64>>).unwrap();
    assert_eq!(out.iterations, 1);
    assert!(rel_diff(&out.x, &b) < 1e-15);

    let d: Vec<f64> = (1..=10).map(|i| i as f64).collect();
    let op = |v: &[f64]| v.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
    let out = gmres(op, &[1.0; 10], 1e-12, 100, None::<fn(&[f64]) -> Vec<f64>>).unwrap();
    assert!(out.iterations <= 10);
    assert!(out.residual <= 1e-11);
    // An exact preconditioner converges at once.
    let inv = |v: &[f64]| v.iter().zip(&d).map(|(a, b)| a / b).collect::<Vec<_>>();
    let out = gmres(op, &[1.0; 10], 1e-12, 100, Some(inv)).unwrap();
    assert_eq!(out.iterations, 1);

    let zero = gmres(op, &[0.0; 10], 1e-12, 100, None::<fn(&[f64]) -> Vec<f64>>).unwrap();
    assert_eq!((zero.iterations, zero.x), (0, vec![0.0; 10]));
    assert!(gmres(op, &[1.0; 10], 0.0, 100, None::<fn(&[f64]) -> Vec<f64>>).is_err());
}

#[test]
fn gmres_random_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut a = random_mat(&mut rng, 50, 50, 1.0 / 50f64.sqrt());
    a.add_diag(2.0);
    let b = random_vec::<f64>(50, 12);
    let tol = 1e-10;
    let out = gmres(|v: &[f64]| a.matvec(v), &b, tol, 100, None::<fn(&[f64]) -> Vec<f64>>).unwrap();
    let want = Lu::factor(&a).unwrap().solve(&b);
    assert!(rel_diff(&out.x, &want) <= 10.0 * tol, "{}", rel_diff(&out.x, &want));

    // Complex, and a budget too small to converge.
    let ac: Mat<Complex64> = Mat::from_fn(40, 40, |i, j| {
        let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) / 40f64.sqrt();
        if i == j {
            v + Complex64::new(0.0, 3.0)
        } else {
            v
        }
    });
    let bc = random_vec::<Complex64>(40, 13);
    let out = gmres(|v: &[Complex64]| ac.matvec(v), &bc, tol, 100, None::<fn(&[Complex64]) -> Vec<Complex64>>).unwrap();
    assert!(rel_diff(&out.x, &Lu::factor(&ac).unwrap().solve(&bc)) <= 10.0 * tol);
    match gmres(|v: &[Complex64]| ac.matvec(v), &bc, 1e-14, 3, None::<fn(&[Complex64]) -> Vec<Complex64>>) {
        Err(GmresError::NotConverged { best, iterations, residual }) => {
            assert_eq!(iterations, 3);
            assert_eq!(best.len(), 40);
            assert!(residual < 1.0);
        }
        other => panic!("expected NotConverged, got {:?}", other.map(|o| o.iterations)),
    }
}

#[test]
fn containers_round_trip_bit_exact() {
    let (_, cm) = circle_double_layer::<f64>(300, 1e-8);
    let bytes = cm.to_bytes();
    let back = CompressedMatrix::<f64>::from_bytes(&bytes).unwrap();
    assert_eq!(back, cm);
    assert_eq!(back.to_bytes(), bytes);
    assert!(CompressedMatrix::<Complex64>::from_bytes(&bytes).is_err());
    assert!(CompressedMatrix::<f64>::from_bytes(&bytes[..bytes.len() - 3]).is_err());

    let fi = factor(&cm).unwrap();
    let fb = fi.to_bytes();
    let fback = FactoredInverse::<f64>::from_bytes(&fb).unwrap();
    assert_eq!(fback.to_bytes(), fb);
    let b = random_vec::<f64>(300, 4);
    assert_eq!(fback.solve(&b).unwrap(), fi.solve(&b).unwrap());
    assert!(CompressedMatrix::<f64>::from_bytes(&fb).is_err());

    let c32: CompressedMatrix<num_complex::Complex32> = {
        let spec = KernelSpec::helmholtz(2, Layer::Single, 3.0);
        let op = KernelOperator::new(spec, shapes::circle(200)).unwrap();
        compress(&op, &build_tree(op.points(), 32).unwrap(), &CompressOptions::new(1e-4)).unwrap()
    };
    let bytes = c32.to_bytes();
    assert_eq!(CompressedMatrix::from_bytes(&bytes).unwrap(), c32);
    assert!((c32.storage_mb() - bytes.len() as f64 / 1e6).abs() < 1e-12);
}
