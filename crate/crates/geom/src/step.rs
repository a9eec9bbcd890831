//! Semantic lift: product structure, placements and point clouds.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, Vector3};

use crate::aabb::Aabb;
use crate::error::StepError;
use crate::lexer::decode_bytes;
use crate::parser::{parse_exchange, Entity, Header, Param};
use crate::transform::Transform;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductNode {
    /// Instance id of the PRODUCT entity.
    pub id: u64,
    /// The PRODUCT `id` attribute (part number).
    pub product_id: String,
    pub name: String,
    /// Child product and the transform mapping child coordinates into ours.
    pub children: Vec<(u64, Transform)>,
    /// Points in millimetres, in this product's own frame.
    pub points: Vec<Point3<f64>>,
    /// Z direction of the lowest-numbered AXIS2_PLACEMENT_3D among the
    /// product's representation items.
    pub primary_axis: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepModel {
    pub header: Header,
    /// Every instance, including types the lift ignores.
    pub entities: BTreeMap<u64, Entity>,
    pub products: Vec<ProductNode>,
    /// Millimetres per file length unit.
    pub length_scale: f64,
}

fn malformed(e: &Entity, message: impl Into<String>) -> StepError {
    StepError::Malformed {
        entity: e.type_name().to_string(),
        id: e.id,
        message: message.into(),
    }
}

fn is_definition(e: &Entity) -> bool {
    let t = e.type_name().to_ascii_uppercase();
    !e.complex && (t == "PRODUCT_DEFINITION" || t == "PRODUCT_DEFINITION_WITH_ASSOCIATED_DOCUMENTS")
}

struct Lift<'a> {
    entities: &'a BTreeMap<u64, Entity>,
    scale: f64,
}

impl<'a> Lift<'a> {
    fn get(&self, id: u64) -> &'a Entity {
        // references were checked during parsing
        &self.entities[&id]
    }

    fn of_type(&self, name: &'a str) -> impl Iterator<Item = &'a Entity> + 'a {
        self.entities.values().filter(move |e| e.is(name))
    }

    fn param<'e>(&self, e: &'e Entity, rec: &str, i: usize) -> Result<&'e Param, StepError> {
        e.record(rec)
            .and_then(|r| r.params.get(i))
            .ok_or_else(|| malformed(e, format!("{rec} has no parameter {}", i + 1)))
    }

    fn ref_param(&self, e: &Entity, rec: &str, i: usize) -> Result<u64, StepError> {
        self.param(e, rec, i)?
            .as_ref_id()
            .ok_or_else(|| malformed(e, format!("parameter {} of {rec} must be a reference", i + 1)))
    }

    fn triple(&self, e: &Entity, rec: &str) -> Result<Vector3<f64>, StepError> {
        let list = self
            .param(e, rec, 1)?
            .as_list()
            .ok_or_else(|| malformed(e, "coordinates must be a list"))?;
        let mut v = [0.0; 3];
        if list.is_empty() || list.len() > 3 {
            return Err(malformed(e, "expected 1 to 3 coordinates"));
        }
        for (slot, p) in v.iter_mut().zip(list) {
            *slot = p.as_f64().ok_or_else(|| malformed(e, "non-numeric coordinate"))?;
        }
        Ok(Vector3::from(v))
    }

    fn point(&self, id: u64) -> Result<Point3<f64>, StepError> {
        let e = self.get(id);
        if !e.is("CARTESIAN_POINT") {
            return Err(malformed(e, "expected CARTESIAN_POINT"));
        }
        Ok(Point3::from(self.triple(e, "CARTESIAN_POINT")? * self.scale))
    }

    fn direction(&self, id: u64) -> Result<Vector3<f64>, StepError> {
        let e = self.get(id);
        if !e.is("DIRECTION") {
            return Err(malformed(e, "expected DIRECTION"));
        }
        self.triple(e, "DIRECTION")
    }

    fn placement(&self, id: u64) -> Result<Transform, StepError> {
        let e = self.get(id);
        if !e.is("AXIS2_PLACEMENT_3D") {
            return Err(malformed(e, "expected AXIS2_PLACEMENT_3D"));
        }
        let loc = self.point(self.ref_param(e, "AXIS2_PLACEMENT_3D", 1)?)?;
        let opt_dir = |i| -> Result<Option<Vector3<f64>>, StepError> {
            match self.param(e, "AXIS2_PLACEMENT_3D", i) {
                Ok(Param::Ref(r)) => self.direction(*r).map(Some),
                _ => Ok(None),
            }
        };
        Transform::from_placement(loc.coords, opt_dir(2)?, opt_dir(3)?)
            .ok_or_else(|| malformed(e, "degenerate axis/ref_direction"))
    }

    /// Product reached from a PRODUCT_DEFINITION via its formation.
    fn product_of_definition(&self, pd: u64) -> Result<u64, StepError> {
        let pd = self.get(pd);
        if !is_definition(pd) {
            return Err(malformed(pd, "expected PRODUCT_DEFINITION"));
        }
        let pdf = self.get(self.ref_param(pd, pd.type_name(), 2)?);
        let product = self.ref_param(pdf, pdf.type_name(), 2)?;
        if !self.get(product).is("PRODUCT") {
            return Err(malformed(pdf, "formation does not reference a PRODUCT"));
        }
        Ok(product)
    }

    /// Shape representations attached to a product definition, following
    /// untransformed SHAPE_REPRESENTATION_RELATIONSHIPs.
    fn representations(&self, pd: u64) -> Result<Vec<u64>, StepError> {
        let mut reps = BTreeSet::new();
        for pds in self.of_type("PRODUCT_DEFINITION_SHAPE") {
            if self.param(pds, "PRODUCT_DEFINITION_SHAPE", 2)?.as_ref_id() != Some(pd) {
                continue;
            }
            for sdr in self.of_type("SHAPE_DEFINITION_REPRESENTATION") {
                if self.ref_param(sdr, "SHAPE_DEFINITION_REPRESENTATION", 0)? == pds.id {
                    reps.insert(self.ref_param(sdr, "SHAPE_DEFINITION_REPRESENTATION", 1)?);
                }
            }
        }
        loop {
            let before = reps.len();
            for rel in self.entities.values() {
                if rel.complex || !rel.is("SHAPE_REPRESENTATION_RELATIONSHIP") {
                    continue;
                }
                let r1 = self.ref_param(rel, "SHAPE_REPRESENTATION_RELATIONSHIP", 2)?;
                let r2 = self.ref_param(rel, "SHAPE_REPRESENTATION_RELATIONSHIP", 3)?;
                if reps.contains(&r1) {
                    reps.insert(r2);
                }
                if reps.contains(&r2) {
                    reps.insert(r1);
                }
            }
            if reps.len() == before {
                return Ok(reps.into_iter().collect());
            }
        }
    }

    fn rep_items(&self, rep: u64) -> Result<Vec<u64>, StepError> {
        let e = self.get(rep);
        let rec = &e.records[0];
        let items = rec
            .params
            .get(1)
            .and_then(Param::as_list)
            .ok_or_else(|| malformed(e, "representation items must be a list"))?;
        Ok(items.iter().filter_map(Param::as_ref_id).collect())
    }

    /// Points reachable from the items without crossing placements or
    /// nested representations.
    fn collect_points(
        &self,
        items: &[u64],
        seen: &mut BTreeSet<u64>,
        out: &mut Vec<Point3<f64>>,
    ) -> Result<(), StepError> {
        let mut stack: Vec<u64> = items.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            let e = self.get(id);
            if e.is("AXIS2_PLACEMENT_3D") || e.is("AXIS2_PLACEMENT_2D") || e.is("AXIS1_PLACEMENT") {
                continue;
            }
            if e.records
                .iter()
                .any(|r| r.name.to_ascii_uppercase().contains("REPRESENTATION"))
            {
                continue;
            }
            if e.is("CARTESIAN_POINT") {
                out.push(self.point(id)?);
                continue;
            }
            let mut refs = e.refs();
            refs.reverse();
            stack.extend(refs);
        }
        Ok(())
    }

    /// Transform carried by the CONTEXT_DEPENDENT_SHAPE_REPRESENTATION
    /// attached to an assembly usage, if any.
    fn usage_transform(&self, nauo: u64) -> Result<Option<Transform>, StepError> {
        for pds in self.of_type("PRODUCT_DEFINITION_SHAPE") {
            if self.param(pds, "PRODUCT_DEFINITION_SHAPE", 2)?.as_ref_id() != Some(nauo) {
                continue;
            }
            for cdsr in self.of_type("CONTEXT_DEPENDENT_SHAPE_REPRESENTATION") {
                if self.ref_param(cdsr, "CONTEXT_DEPENDENT_SHAPE_REPRESENTATION", 1)? != pds.id {
                    continue;
                }
                let rel = self.get(self.ref_param(cdsr, "CONTEXT_DEPENDENT_SHAPE_REPRESENTATION", 0)?);
                let tr = self.ref_param(rel, "REPRESENTATION_RELATIONSHIP_WITH_TRANSFORMATION", 0)?;
                let idt = self.get(tr);
                if !idt.is("ITEM_DEFINED_TRANSFORMATION") {
                    return Err(malformed(idt, "only ITEM_DEFINED_TRANSFORMATION is supported"));
                }
                let from = self.placement(self.ref_param(idt, "ITEM_DEFINED_TRANSFORMATION", 2)?)?;
                let to = self.placement(self.ref_param(idt, "ITEM_DEFINED_TRANSFORMATION", 3)?)?;
                return Ok(Some(from.inverse().then(&to)));
            }
        }
        Ok(None)
    }

    fn products(&self) -> Result<Vec<ProductNode>, StepError> {
        let mut nodes: BTreeMap<u64, ProductNode> = BTreeMap::new();
        for p in self.of_type("PRODUCT") {
            let s = |i| -> Result<String, StepError> {
                Ok(self.param(p, "PRODUCT", i)?.as_str().unwrap_or("").to_string())
            };
            nodes.insert(
                p.id,
                ProductNode {
                    id: p.id,
                    product_id: s(0)?,
                    name: s(1)?,
                    children: Vec::new(),
                    points: Vec::new(),
                    primary_axis: None,
                },
            );
        }

        for pd in self.entities.values() {
            if !is_definition(pd) {
                continue;
            }
            let product = self.product_of_definition(pd.id)?;
            let mut seen = BTreeSet::new();
            let mut points = Vec::new();
            let mut axis_placement: Option<u64> = None;
            for rep in self.representations(pd.id)? {
                let items = self.rep_items(rep)?;
                for &i in &items {
                    if self.get(i).is("AXIS2_PLACEMENT_3D") {
                        axis_placement = Some(axis_placement.map_or(i, |a| a.min(i)));
                    }
                }
                self.collect_points(&items, &mut seen, &mut points)?;
            }
            let node = nodes.get_mut(&product).expect("product exists");
            node.points.extend(points);
            if let Some(a) = axis_placement {
                node.primary_axis = Some(self.placement(a)?.rotation.column(2).into_owned());
            }
        }

        for nauo in self.of_type("NEXT_ASSEMBLY_USAGE_OCCURRENCE") {
            let parent = self.product_of_definition(self.ref_param(nauo, "NEXT_ASSEMBLY_USAGE_OCCURRENCE", 3)?)?;
            let child = self.product_of_definition(self.ref_param(nauo, "NEXT_ASSEMBLY_USAGE_OCCURRENCE", 4)?)?;
            let t = match self.usage_transform(nauo.id)? {
                Some(t) => t,
                None => {
                    log::warn!("assembly usage #{} has no placement; using identity", nauo.id);
                    Transform::identity()
                }
            };
            nodes
                .get_mut(&parent)
                .expect("product exists")
                .children
                .push((child, t));
        }
        Ok(nodes.into_values().collect())
    }
}

/// Millimetres per unit of the first LENGTH_UNIT declared in the file.
fn length_scale(entities: &BTreeMap<u64, Entity>) -> Result<f64, StepError> {
    let Some(unit) = entities.values().find(|e| e.is("LENGTH_UNIT")) else {
        log::info!("no length unit declared; assuming millimetres");
        return Ok(1.0);
    };
    if let Some(si) = unit.record("SI_UNIT") {
        let prefix = match si.params.first() {
            Some(Param::Enum(p)) => p.to_ascii_uppercase(),
            _ => String::new(),
        };
        let factor = match prefix.as_str() {
            "" => 1.0,
            "KILO" => 1e3,
            "CENTI" => 1e-2,
            "MILLI" => 1e-3,
            "MICRO" => 1e-6,
            "NANO" => 1e-9,
            "DECI" => 1e-1,
            other => return Err(malformed(unit, format!("unsupported SI prefix {other}"))),
        };
        return Ok(factor * 1000.0);
    }
    if let Some(conv) = unit.record("CONVERSION_BASED_UNIT") {
        let name = conv.params.first().and_then(Param::as_str).unwrap_or("");
        return match name.to_ascii_uppercase().as_str() {
            "INCH" => Ok(25.4),
            "FOOT" => Ok(304.8),
            other => Err(malformed(unit, format!("unsupported length unit {other:?}"))),
        };
    }
    Err(malformed(unit, "length unit is neither SI nor conversion based"))
}

fn check_acyclic(products: &[ProductNode]) -> Result<(), StepError> {
    let children: BTreeMap<u64, Vec<u64>> = products
        .iter()
        .map(|p| (p.id, p.children.iter().map(|c| c.0).collect()))
        .collect();
    // 0 unvisited, 1 on stack, 2 done
    let mut state: BTreeMap<u64, u8> = BTreeMap::new();
    fn visit(
        id: u64,
        children: &BTreeMap<u64, Vec<u64>>,
        state: &mut BTreeMap<u64, u8>,
        path: &mut Vec<u64>,
    ) -> Result<(), StepError> {
        match state.get(&id).copied().unwrap_or(0) {
            2 => return Ok(()),
            1 => {
                let start = path.iter().position(|&p| p == id).unwrap_or(0);
                let mut cycle = path[start..].to_vec();
                cycle.push(id);
                return Err(StepError::CyclicAssembly(cycle));
            }
            _ => {}
        }
        state.insert(id, 1);
        path.push(id);
        for &c in &children[&id] {
            visit(c, children, state, path)?;
        }
        path.pop();
        state.insert(id, 2);
        Ok(())
    }
    for &id in children.keys() {
        visit(id, &children, &mut state, &mut Vec::new())?;
    }
    Ok(())
}

pub fn parse_step(bytes: &[u8]) -> Result<StepModel, StepError> {
    let text = decode_bytes(bytes);
    let exchange = parse_exchange(&text)?;
    let scale = length_scale(&exchange.entities)?;
    let lift = Lift {
        entities: &exchange.entities,
        scale,
    };
    let products = lift.products()?;
    check_acyclic(&products)?;
    Ok(StepModel {
        header: exchange.header,
        entities: exchange.entities,
        products,
        length_scale: scale,
    })
}

impl StepModel {
    pub fn product(&self, id: u64) -> Result<&ProductNode, StepError> {
        self.products
            .iter()
            .find(|p| p.id == id)
            .ok_or(StepError::UnknownProduct(id))
    }

    /// Looks a product up by name, falling back to its part number.
    pub fn product_by_name(&self, name: &str) -> Option<&ProductNode> {
        self.products
            .iter()
            .find(|p| p.name == name)
            .or_else(|| self.products.iter().find(|p| p.product_id == name))
    }

    /// Products that are nobody's child.
    pub fn roots(&self) -> Vec<u64> {
        let children: BTreeSet<u64> = self
            .products
            .iter()
            .flat_map(|p| p.children.iter().map(|c| c.0))
            .collect();
        self.products
            .iter()
            .map(|p| p.id)
            .filter(|id| !children.contains(id))
            .collect()
    }

    /// Transform from a product's frame into its root's frame, along the
    /// first occurrence found depth-first from the roots.
    pub fn world_transform(&self, id: u64) -> Result<Transform, StepError> {
        self.product(id)?;
        fn search(m: &StepModel, at: u64, target: u64, chain: &mut Vec<Transform>) -> bool {
            if at == target {
                return true;
            }
            let node = m.product(at).expect("known product");
            for (c, t) in &node.children {
                chain.push(*t);
                if search(m, *c, target, chain) {
                    return true;
                }
                chain.pop();
            }
            false
        }
        for root in self.roots() {
            let mut chain = Vec::new();
            if search(self, root, id, &mut chain) {
                chain.reverse();
                return crate::transform::compose_transforms(&chain);
            }
        }
        Err(StepError::UnknownProduct(id))
    }

    /// Primary axis expressed in the root frame.
    pub fn world_axis(&self, id: u64) -> Result<Option<Vector3<f64>>, StepError> {
        let t = self.world_transform(id)?;
        Ok(self.product(id)?.primary_axis.map(|a| t.apply_vector(&a)))
    }
}

/// AABB in the product's own frame; with `include_children`, descendants'
/// points are mapped through their composed placements.
pub fn compute_aabb(model: &StepModel, product: u64, include_children: bool) -> Result<Aabb, StepError> {
    fn walk(m: &StepModel, id: u64, to_top: &Transform, acc: &mut Aabb) -> Result<(), StepError> {
        let node = m.product(id)?;
        for p in &node.points {
            *acc = acc.include(&to_top.apply(p));
        }
        for (c, t) in &node.children {
            walk(m, *c, &t.then(to_top), acc)?;
        }
        Ok(())
    }
    let node = model.product(product)?;
    if !include_children {
        return Ok(Aabb::from_points(&node.points));
    }
    let mut acc = Aabb::Empty;
    walk(model, product, &Transform::identity(), &mut acc)?;
    Ok(acc)
}
