mod common;

use common::{central, rel_err, rng, uniform};
use proptest::prelude::*;
use varipade::integrand::{BinOp, Func, Node, Var};
use varipade::{parse_integrand, Error, IntegrandExpr};

const EXPRESSIONS: [&str; 7] = [
    "sqrt(1 + dy^2)",
    "y * dy^3",
    "dy^2 + x*dy",
    "dy^2 - 2*y*cos(x + pi/2)",
    "dy^2 - y^2 - 2*x*y",
    "exp(-y^2) * sin(dy) / (2 + cos(x*y))",
    "sqrt(y^2 + dy^2 + 1)^1.5 - y^y^0.5 * 0 + (y*dy)^-2",
];

#[test]
fn partials_match_central_differences() {
    let mut r = rng(17);
    for text in EXPRESSIONS {
        let expr = parse_integrand(text).unwrap();
        let mut checked = 0;
        while checked < 1000 {
            let (x, y, dy) = (uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0));
            let Ok(e) = expr.eval(x, y, dy) else { continue };
            // stay clear of domain boundaries so the stencil is valid
            let value = |y: f64, dy: f64| expr.eval(x, y, dy).map(|e| e.value);
            if [(y + 1e-5, dy), (y - 1e-5, dy), (y, dy + 1e-5), (y, dy - 1e-5)]
                .iter()
                .any(|&(a, b)| value(a, b).is_err())
            {
                continue;
            }
            if e.value.abs() > 1e4 {
                continue;
            }
            let fd_y = central(|t| value(t, dy).unwrap(), y);
            let fd_dy = central(|t| value(y, t).unwrap(), dy);
            assert!(rel_err(e.df_dy, fd_y, 1e-8) <= 1e-6, "{text} dF/dy at ({x},{y},{dy}): {} vs {fd_y}", e.df_dy);
            assert!(rel_err(e.df_ddy, fd_dy, 1e-8) <= 1e-6, "{text} dF/ddy at ({x},{y},{dy}): {} vs {fd_dy}", e.df_ddy);
            checked += 1;
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let mut r = rng(3);
    for text in EXPRESSIONS {
        let a = parse_integrand(text).unwrap();
        let b = parse_integrand(text).unwrap();
        for _ in 0..100 {
            let (x, y, dy) = (uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0), uniform(&mut r, -2.0, 2.0));
            match (a.eval(x, y, dy), b.eval(x, y, dy)) {
                (Ok(p), Ok(q)) => {
                    assert_eq!(p.value.to_bits(), q.value.to_bits());
                    assert_eq!(p.df_dy.to_bits(), q.df_dy.to_bits());
                    assert_eq!(p.df_ddy.to_bits(), q.df_ddy.to_bits());
                }
                (Err(p), Err(q)) => assert_eq!(p, q),
                other => panic!("diverging results {other:?}"),
            }
        }
    }
}

#[test]
fn identifiers_outside_the_set_are_rejected() {
    for (text, name) in [("frob(x)", "frob"), ("y + z", "z"), ("ddy", "ddy"), ("tan(x)", "tan"), ("X", "X")] {
        match parse_integrand(text) {
            Err(Error::UnknownIdentifier { name: got, .. }) => assert_eq!(got, name),
            other => panic!("{text}: {other:?}"),
        }
    }
}

fn arb_node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, e)| Node::Const(m as f64 / 10f64.powi(e as i32))),
        Just(Node::Pi),
        prop_oneof![Just(Var::X), Just(Var::Y), Just(Var::Dy)].prop_map(Node::Var),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        let func = prop_oneof![Just(Func::Sqrt), Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)];
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, a)| Node::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printing_round_trips(node in arb_node()) {
        let expr = IntegrandExpr::from_node(node);
        let reparsed = parse_integrand(&expr.to_string()).unwrap();
        prop_assert_eq!(reparsed, expr);
    }
}
