use super::parser::{DriveForm, ElementNode, Item, NetlistAst, ParamValue};
use super::NetlistError;
use crate::circuit::{Dissipator, Element, ElementKind, KineticData, PhaseSpaceModel};
use crate::error::{CoreError, Result};
use crate::scalar::ScalarFunction;

/// Compile a parsed netlist into a phase-space model.
///
/// Series dissipator characteristics add; a parallel node compiles to the
/// reciprocal-voltage combination and marks the model non-series. Passivity
/// is validated during element construction, with failures reported at the
/// offending element's source span.
pub fn compile(ast: &NetlistAst) -> Result<PhaseSpaceModel> {
    let mut inductance: Option<(ScalarFunction, &ElementNode)> = None;
    let mut capacitor_voltage = ScalarFunction::zero();
    let mut resistance = ScalarFunction::zero();
    let mut memristance = ScalarFunction::zero();
    let mut drive = ScalarFunction::zero();
    let mut parallel: Option<(ScalarFunction, ScalarFunction, super::Span)> = None;
    let mut series_dissipators = false;

    for item in &ast.items {
        match item {
            Item::Element(el) => match el.kind {
                ElementKind::Inductor => {
                    inductance = Some((characteristic(el), el));
                }
                ElementKind::Capacitor => {
                    capacitor_voltage = match (&el.key[..], &el.value) {
                        ("C0", ParamValue::Number(c0)) => {
                            if *c0 <= 0.0 {
                                return Err(at_span(
                                    el,
                                    format!("capacitance must be strictly positive, found {c0}"),
                                ));
                            }
                            ScalarFunction::polynomial(vec![0.0, 1.0 / c0])
                        }
                        _ => characteristic(el),
                    };
                }
                ElementKind::Resistor => {
                    series_dissipators = true;
                    let validated = Element::new(ElementKind::Resistor, characteristic(el))
                        .map_err(|e| at_span(el, e.to_string()))?;
                    resistance = resistance.try_add(&validated.characteristic)?;
                }
                ElementKind::Memristor => {
                    series_dissipators = true;
                    let validated = Element::new(ElementKind::Memristor, characteristic(el))
                        .map_err(|e| at_span(el, e.to_string()))?;
                    memristance = memristance.try_add(&validated.characteristic)?;
                }
            },
            Item::Parallel { first, second, span } => {
                let (r_el, m_el) = if first.kind == ElementKind::Resistor {
                    (first, second)
                } else {
                    (second, first)
                };
                parallel = Some((characteristic(r_el), characteristic(m_el), *span));
            }
            Item::Drive { form, .. } => {
                drive = match form {
                    DriveForm::Zero => ScalarFunction::zero(),
                    DriveForm::Const(v) => ScalarFunction::constant(*v),
                    DriveForm::Sin { amp, omega, phase } => {
                        ScalarFunction::sinusoid(*amp, *omega, *phase)
                    }
                };
            }
        }
    }

    let (l_char, l_node) = inductance.expect("parser guarantees exactly one inductor");
    if parallel.is_some() && series_dissipators {
        return Err(CoreError::Netlist(NetlistError::Structure {
            line: ast.span.line,
            col: ast.span.col,
            message: "parallel dissipator cannot be combined with series R/M elements".into(),
        }));
    }

    let kinetic = match (&l_node.key[..], &l_node.value) {
        ("L0", ParamValue::Number(l0)) => KineticData::from_constant_inductance(*l0)
            .map_err(|e| at_span(l_node, e.to_string()))?,
        _ => KineticData::from_inductance(l_char).map_err(|e| at_span(l_node, e.to_string()))?,
    };

    let dissipator = match parallel {
        Some((r, m, span)) => {
            Dissipator::parallel(r, m).map_err(|e| {
                CoreError::Netlist(NetlistError::Structure {
                    line: span.line,
                    col: span.col,
                    message: e.to_string(),
                })
            })?
        }
        None => Dissipator::series(resistance, memristance)?,
    };

    Ok(PhaseSpaceModel::new(
        kinetic,
        capacitor_voltage,
        drive,
        dissipator,
    ))
}

fn characteristic(el: &ElementNode) -> ScalarFunction {
    match &el.value {
        ParamValue::Number(v) => ScalarFunction::constant(*v),
        ParamValue::Poly { coeffs, .. } => ScalarFunction::polynomial(coeffs.clone()),
    }
}

fn at_span(el: &ElementNode, message: String) -> CoreError {
    CoreError::Netlist(NetlistError::Structure {
        line: el.span.line,
        col: el.span.col,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;
    use approx::assert_relative_eq;

    #[test]
    fn series_constants_match_hand_built_model() {
        let ast = parse("circuit { L{L0=1} C{C0=1} R{R=poly(I;0.2)} M{M=poly(q;0.3)} }").unwrap();
        let model = compile(&ast).unwrap();
        assert!(model.is_series());
        assert_relative_eq!(model.dissipation(0.7, -0.2).unwrap(), 0.5, epsilon = 1e-15);

        let oracle = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap();
        for (q, p) in [(1.0, 1.0), (-0.5, 2.0), (0.1, -0.1)] {
            let a = model.drift(0.0, q, p).unwrap();
            let b = oracle.drift(0.0, q, p).unwrap();
            assert_relative_eq!(a.0, b.0, epsilon = 1e-12);
            assert_relative_eq!(a.1, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn inductor_only_circuit_is_a_free_particle() {
        let model = compile(&parse("circuit { L{L0=1} }").unwrap()).unwrap();
        let (vq, vp) = model.drift(0.0, 3.0, 0.4).unwrap();
        assert_relative_eq!(vq, 0.4, epsilon = 1e-15);
        assert_relative_eq!(vp, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn parallel_dissipator_compiles_to_non_series_model() {
        let ast =
            parse("circuit { L{L0=1} parallel{ R{R=poly(I;0.2)} M{M=poly(q;0.3)} } }").unwrap();
        let model = compile(&ast).unwrap();
        assert!(!model.is_series());
        assert_relative_eq!(
            model.dissipator_voltage(1.0, 1.0).unwrap(),
            0.12,
            epsilon = 1e-12
        );
    }

    #[test]
    fn negative_resistance_fails_passivity_with_position() {
        let ast = parse("circuit { L{L0=1} R{R=poly(I;-0.2)} }").unwrap();
        let err = compile(&ast).unwrap_err();
        match err {
            CoreError::Netlist(e) => {
                assert_eq!(e.position(), (1, 19));
                assert!(e.to_string().contains("nonnegative"));
            }
            other => panic!("expected a positioned diagnostic, got {other}"),
        }
    }

    #[test]
    fn series_voltages_add_across_repeated_elements() {
        let two = compile(&parse("circuit { L{L0=1} R{R=poly(I;0.2)} R{R=poly(I;0.3)} }").unwrap())
            .unwrap();
        let one = compile(&parse("circuit { L{L0=1} R{R=poly(I;0.5)} }").unwrap()).unwrap();
        assert_relative_eq!(
            two.drift(0.0, 0.3, 1.1).unwrap().1,
            one.drift(0.0, 0.3, 1.1).unwrap().1,
            epsilon = 1e-15
        );
    }
}
