use super::*;
use crate::surface::{lower, parse_source, ArgValue};

fn run_with(src: &str, opts: &ExecOptions) -> Execution {
    let p = parse_source(src, "t.tsl").unwrap();
    let ir = lower(&p, &BTreeMap::<String, ArgValue>::new()).unwrap();
    execute(&ir, opts).unwrap()
}

fn run(src: &str) -> Execution {
    run_with(src, &ExecOptions::default())
}

fn classes(ex: &Execution) -> Vec<OnlineClass> {
    ex.paths.iter().map(PathResult::online_class).collect()
}

fn rand_blocks(n: usize) -> String {
    let mut src = String::from(
        "def block(x):\n    r = rand_int(0, 1)\n    if r == 1:\n        res = linear(x, 32, 32)\n    else:\n        res = x\n    return res\n\nx = randn(16, 32)\n",
    );
    for _ in 0..n {
        src.push_str("x = block(x)\n");
    }
    src
}

#[test]
fn arithmetic_is_folded() {
    let ex = run("x = 1 + 2\n");
    assert_eq!(ex.paths.len(), 1);
    assert!(ex.paths[0].state.constraints.is_empty());
}

#[test]
fn mm_records_nothing_on_matching_ground_shapes() {
    let ex = run("a = randn(3, 4)\nb = randn(4, 5)\nc = mm(a, b)\n");
    assert_eq!(classes(&ex), vec![OnlineClass::PotentialSuccess]);
}

#[test]
fn ground_mismatch_fails_immediately() {
    let ex = run("a = randn(3, 4)\nb = randn(5, 5)\nc = mm(a, b)\nd = mm(c, c)\n");
    assert_eq!(classes(&ex), vec![OnlineClass::ImmediateFail]);
    let PathStatus::ImmediateFail(c) = &ex.paths[0].state.status else { panic!() };
    assert_eq!(c.op.as_deref(), Some("mm"));
    assert_eq!(c.origin.line, 3);
}

#[test]
fn constant_branch_takes_one_arm() {
    let ex = run("four = 4\nif four == 4:\n    x = randn(2, 2)\nelse:\n    x = randn(3)\ny = mm(x, x)\n");
    assert_eq!(ex.paths.len(), 1);
    assert_eq!(ex.merges, 0);
}

#[test]
fn symbolic_branch_splits_with_hard_conditions() {
    let ex = run("r = rand_int(0, 3)\nif r == 1:\n    x = randn(2, 3)\nelse:\n    x = randn(3, 2)\n");
    assert_eq!(ex.paths.len(), 2);
    for p in &ex.paths {
        assert!(p.state.constraints.iter().any(|c| c.branch && c.kind == Kind::Hard));
    }
}

#[test]
fn identical_arms_merge() {
    let ex = run(&rand_blocks(24));
    assert_eq!(ex.paths.len(), 1);
    assert_eq!(ex.merges, 24);
    assert!(ex.paths[0].state.constraints.iter().all(|c| !c.branch));
}

#[test]
fn merging_disabled_enumerates_paths() {
    let opts = ExecOptions {
        merge: false,
        ..ExecOptions::default()
    };
    let ex = run_with(&rand_blocks(10), &opts);
    assert_eq!(ex.paths.len(), 1024);
}

#[test]
fn global_writes_block_merge() {
    let src = "count = 0\ndef f():\n    global count\n    r = rand_int(0, 1)\n    if r == 1:\n        count = 1\n    return 0\nf()\n";
    let ex = run(src);
    assert_eq!(ex.paths.len(), 2);
}

#[test]
fn transposed_arms_do_not_merge() {
    let src = "def f(n):\n    r = rand_int(0, 1)\n    if r == 1:\n        y = randn(n, 32)\n    else:\n        y = randn(32, n)\n    return y\nd = dataset(\"custom\", batch_size=4)\nfor x, y in d:\n    z = f(len(x))\n";
    let ex = run(src);
    assert!(ex.paths.len() >= 2);
    assert_eq!(ex.merges, 0);
}

#[test]
fn range_loops_unroll() {
    let ex = run("x = randn(2)\nfor i in range(3):\n    x = cat([x, x], 0)\ny = mm(x, x)\n");
    let PathStatus::ImmediateFail(c) = &ex.paths[0].state.status else { panic!("{:?}", ex.paths[0].state.status) };
    assert_eq!(c.origin.line, 4);
    assert_eq!(ex.paths[0].state.constraints.len(), 1);
    let ex = run("x = randn(2)\nfor i in range(0):\n    x = 1\ny = x\n");
    assert_eq!(ex.paths.len(), 1);
}

#[test]
fn unmergeable_loop_branches_compound() {
    let src = "x = 0\nfor i in range(3):\n    r = rand_int(0, 1)\n    if r == 1:\n        x = x + 1\n    else:\n        x = x + 2\n";
    assert_eq!(run(src).paths.len(), 8);
}

#[test]
fn dataset_loop_has_regular_and_residual_cases() {
    let src = "for x, y in dataset(\"mnist\", batch_size=64):\n    z = x.view(64, -1)\n    w = linear(z, 784, 10)\n";
    let ex = run(src);
    assert_eq!(classes(&ex), vec![OnlineClass::PotentialSuccess, OnlineClass::ImmediateFail]);
    let src = "for x, y in dataset(\"mnist\", batch_size=64, drop_last=True):\n    z = x.view(64, -1)\n";
    assert_eq!(run(src).paths.len(), 1);
    let src = "for x, y in dataset(\"mnist\", batch_size=16):\n    z = x.view(16, -1)\n";
    assert_eq!(classes(&run(src)), vec![OnlineClass::PotentialSuccess, OnlineClass::PotentialUnreachable]);
}

#[test]
fn failed_paths_stop_across_epochs() {
    let src = "for e in range(10):\n    for x, y in dataset(\"mnist\", batch_size=64):\n        z = linear(x.view(64, -1), 784, 10)\n";
    let ex = run(src);
    let c = classes(&ex);
    assert_eq!(c.len(), 11);
    assert_eq!(c.iter().filter(|k| **k == OnlineClass::ImmediateFail).count(), 10);
}

#[test]
fn unknown_ops_give_dontknow() {
    let ex = run("x = randn(2)\ny = frobnicate(x)\nz = mm(y, y)\n");
    assert_eq!(classes(&ex), vec![OnlineClass::DontKnow]);
}

#[test]
fn unbound_variable_is_an_error() {
    let p = parse_source("def f():\n    return q\nf()\n", "t.tsl").unwrap();
    assert!(lower(&p, &BTreeMap::new()).is_err() || {
        let ir = lower(&p, &BTreeMap::new()).unwrap();
        matches!(execute(&ir, &ExecOptions::default()), Err(ExecError::UnboundVariable { .. }))
    });
}

#[test]
fn path_cap_reports_dontknow() {
    let opts = ExecOptions {
        merge: false,
        path_cap: 100,
        ..ExecOptions::default()
    };
    let ex = run_with(&rand_blocks(10), &opts);
    let open = ex.paths.iter().filter(|p| p.state.is_open()).count();
    assert!(open <= 100);
    assert!(ex.paths.iter().any(|p| matches!(p.state.status, PathStatus::DontKnow { .. })));
}

#[test]
fn indexing_and_slicing() {
    let ex = run("t = randn(3, 5)\na = t[0]\nb = t[0:1]\nc = t[-1]\nn = t.shape[1]\n");
    assert_eq!(ex.paths.len(), 1);
    let ex = run("t = randn(3, 5)\na = t[3]\n");
    assert_eq!(classes(&ex), vec![OnlineClass::ImmediateFail]);
}

#[test]
fn generations_increase_along_paths() {
    let src = "for x, y in dataset(\"custom\", batch_size=8):\n    r = rand_int(0, 2)\n    if r == 0:\n        z = x.view(8, -1)\n";
    for p in run(src).paths {
        let gens: Vec<u64> = p.state.constraints.iter().map(|c| c.gen).collect();
        assert!(gens.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn execution_is_deterministic() {
    let src = rand_blocks(5) + "y = mm(x, randn(16, 2))\n";
    let a = run(&src);
    let b = run(&src);
    assert_eq!(format!("{:?}", a.paths), format!("{:?}", b.paths));
}
