use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference program family with randomized constants.
pub struct Template {
    pub name: &'static str,
    pub build: fn(&mut ChaCha8Rng) -> (String, Vec<String>),
}

fn c(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn abs_shift(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let k = rng.random_range(0..5);
    let l = rng.random_range(20..60);
    (
        format!("fn f(x: int) -> int {{ if (x < 0) {{ return {k} - x; }} else {{ return x + {k}; }} }}"),
        vec![format!("-{l} <= x <= {l}")],
    )
}

fn max2(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let r = rng.random_range(10..25);
    (
        "fn f(a: int, b: int) -> int { if (a >= b) { return a; } else { return b; } }".into(),
        vec![format!("-{r} <= a <= {r}"), format!("-{r} <= b <= {r}")],
    )
}

fn clamp(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let lo = rng.random_range(1..10);
    let hi = rng.random_range(5..15);
    (
        format!(
            "fn f(x: int) -> int {{ if (x < 0 - {lo}) {{ return 0 - {lo}; }} else {{ if (x > {hi}) {{ return {hi}; }} else {{ return x; }} }} }}"
        ),
        c(&["-40 <= x <= 40"]),
    )
}

fn sum_to(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let m = rng.random_range(5..13);
    (
        "fn f(n: int) -> int { s = 0; i = 0; while (i < n) { i = i + 1; s = s + i; } return s; }".into(),
        vec![format!("0 <= n <= {m}")],
    )
}

fn sign(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let r = rng.random_range(10..40);
    (
        "fn f(x: int) -> int { if (x > 0) { return 1; } else { if (x == 0) { return 0; } else { return 0 - 1; } } }".into(),
        vec![format!("-{r} <= x <= {r}")],
    )
}

fn linear(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let a = rng.random_range(1..5);
    let b = rng.random_range(0..4);
    (
        format!("fn f(x: int, y: int) -> int {{ return {a} * x + y + y - {b}; }}"),
        c(&["-15 <= x <= 15", "-15 <= y <= 15"]),
    )
}

fn count_multiples(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let k = rng.random_range(2..5);
    let m = rng.random_range(6..13);
    (
        format!(
            "fn f(n: int) -> int {{ c = 0; i = 1; while (i <= n) {{ if (i % {k} == 0) {{ c = c + 1; }} i = i + 1; }} return c; }}"
        ),
        vec![format!("1 <= n <= {m}")],
    )
}

fn safe_div(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let d = rng.random_range(0..3);
    (
        format!(
            "fn f(a: int, b: int) -> int {{ if (b == 0) {{ return {d}; }} else {{ return a / b; }} }}"
        ),
        c(&["-20 <= a <= 20", "-5 <= b <= 5"]),
    )
}

fn array_sum(_: &mut ChaCha8Rng) -> (String, Vec<String>) {
    (
        "fn f(a: int[]) -> int { s = 0; i = 0; while (i < len(a)) { s = s + a[i]; i = i + 1; } return s; }".into(),
        c(&["len(a) <= 3"]),
    )
}

fn array_max(_: &mut ChaCha8Rng) -> (String, Vec<String>) {
    (
        "fn f(a: int[]) -> int { m = a[0]; i = 1; while (i < len(a)) { if (a[i] > m) { m = a[i]; } i = i + 1; } return m; }".into(),
        c(&["1 <= len(a) <= 3"]),
    )
}

fn add_in_place(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let k = rng.random_range(1..4);
    (
        format!(
            "fn f(a: int[]) -> unit {{ i = 0; while (i < len(a)) {{ a[i] = a[i] + {k}; i = i + 1; }} return; }}"
        ),
        c(&["len(a) <= 3"]),
    )
}

fn in_window(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let w = rng.random_range(2..6);
    (
        format!("fn f(x: int, lo: int) -> bool {{ return lo <= x && x < lo + {w}; }}"),
        c(&["-10 <= x <= 10", "-10 <= lo <= 10"]),
    )
}

fn collatz_step(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let r = rng.random_range(15..40);
    (
        "fn f(x: int) -> int { if (x % 2 == 0) { return x / 2; } else { return 3 * x + 1; } }".into(),
        vec![format!("-{r} <= x <= {r}")],
    )
}

fn piecewise(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let a = rng.random_range(-5..6);
    let b = rng.random_range(1..8);
    let cut = if a < 0 { format!("0 - {}", -a) } else { a.to_string() };
    (
        format!("fn f(x: int) -> int {{ if (x < {cut}) {{ return x + x; }} else {{ return x + {b}; }} }}"),
        c(&["-30 <= x <= 30"]),
    )
}

fn conditional_negate(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let r = rng.random_range(10..30);
    (
        "fn f(x: int, neg: bool) -> int { if (neg) { return 0 - x; } else { return x; } }".into(),
        vec![format!("-{r} <= x <= {r}")],
    )
}

fn count_positive(_: &mut ChaCha8Rng) -> (String, Vec<String>) {
    (
        "fn f(a: int[]) -> int { c = 0; i = 0; while (i < len(a)) { if (a[i] > 0) { c = c + 1; } i = i + 1; } return c; }".into(),
        c(&["len(a) <= 3"]),
    )
}

pub const TEMPLATES: [Template; 16] = [
    Template { name: "abs_shift", build: abs_shift },
    Template { name: "max2", build: max2 },
    Template { name: "clamp", build: clamp },
    Template { name: "sum_to", build: sum_to },
    Template { name: "sign", build: sign },
    Template { name: "linear", build: linear },
    Template { name: "count_multiples", build: count_multiples },
    Template { name: "safe_div", build: safe_div },
    Template { name: "array_sum", build: array_sum },
    Template { name: "array_max", build: array_max },
    Template { name: "add_in_place", build: add_in_place },
    Template { name: "in_window", build: in_window },
    Template { name: "collatz_step", build: collatz_step },
    Template { name: "piecewise", build: piecewise },
    Template { name: "conditional_negate", build: conditional_negate },
    Template { name: "count_positive", build: count_positive },
];
