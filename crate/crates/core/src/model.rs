//! Reflective instance models.
//!
//! A [`Repository`] holds typed objects spread over named resources. Writes
//! do not enforce conformance; [`Repository::check_conformance`] is meant to
//! be called at the boundaries of a coupled operation. Containment and
//! opposite references are maintained eagerly on every write.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::metamodel::{Feature, Metamodel, MetamodelError, QualifiedName};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjId(String);

impl ObjId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn counter(&self) -> Option<u64> {
        self.0.strip_prefix('o').and_then(|n| n.parse().ok())
    }
}

impl fmt::Display for ObjId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjId {
    fn from(id: &str) -> Self {
        ObjId::new(id)
    }
}

/// A slot value. Enumeration literals are stored as [`Value::Str`]; the
/// metamodel decides how a string is read.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Ref(ObjId),
    List(Vec<Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn reference(id: impl Into<String>) -> Self {
        Value::Ref(ObjId::new(id))
    }

    pub fn as_ref_id(&self) -> Option<&ObjId> {
        match self {
            Value::Ref(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Elements of a list, or the value itself.
    pub fn items(&self) -> &[Value] {
        match self {
            Value::List(items) => items,
            single => std::slice::from_ref(single),
        }
    }

    /// Object ids referenced by this value.
    pub fn refs(&self) -> impl Iterator<Item = &ObjId> {
        self.items().iter().filter_map(Value::as_ref_id)
    }

    fn type_label(&self) -> &'static str {
        match self {
            Value::Str(_) => "String",
            Value::Int(_) => "Int",
            Value::Float(_) => "Float",
            Value::Bool(_) => "Bool",
            Value::Ref(_) => "reference",
            Value::List(_) => "list",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Ref(id) => write!(f, "@{id}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            Value::Str(s) => serializer.serialize_str(s),
            Value::Int(i) => serializer.serialize_i64(*i),
            Value::Float(x) => serializer.serialize_f64(*x),
            Value::Bool(b) => serializer.serialize_bool(*b),
            Value::Ref(id) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("ref", id.as_str())?;
                map.end()
            }
            Value::List(items) => items.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(deserializer)?;
        Value::from_json(&raw, true).map_err(serde::de::Error::custom)
    }
}

impl Value {
    fn from_json(raw: &serde_json::Value, allow_list: bool) -> Result<Value, String> {
        use serde_json::Value as J;
        match raw {
            J::String(s) => Ok(Value::Str(s.clone())),
            J::Bool(b) => Ok(Value::Bool(*b)),
            J::Number(n) => n
                .as_i64()
                .map(Value::Int)
                .or_else(|| n.as_f64().map(Value::Float))
                .ok_or_else(|| format!("unsupported number {n}")),
            J::Object(map) => match (map.len(), map.get("ref")) {
                (1, Some(J::String(id))) => Ok(Value::Ref(ObjId::new(id.clone()))),
                _ => Err("objects in slots must have the form {\"ref\": id}".into()),
            },
            J::Array(items) if allow_list => items
                .iter()
                .map(|item| Value::from_json(item, false))
                .collect::<Result<_, _>>()
                .map(Value::List),
            J::Array(_) => Err("nested lists are not allowed".into()),
            J::Null => Err("null slot values are not allowed; omit the slot".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obj {
    pub id: ObjId,
    pub class: String,
    pub slots: BTreeMap<String, Value>,
    resource: String,
}

impl Obj {
    pub fn resource(&self) -> &str {
        &self.resource
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resource {
    pub name: String,
    pub roots: Vec<ObjId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown object `{0}`")]
    UnknownObject(ObjId),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown resource `{0}`")]
    UnknownResource(String),
    #[error("`{0}` is not a reference")]
    NotAReference(QualifiedName),
    #[error("`{class}.{feature}` is single-valued; use SET instead of ADD")]
    NotMany { class: String, feature: String },
    #[error(transparent)]
    NotFound(#[from] MetamodelError),
    #[error("duplicate object id `{0}`")]
    DuplicateId(ObjId),
    #[error("object `{0}` listed as root of a resource it does not belong to")]
    ForeignRoot(ObjId),
}

/// Feature facts needed by reflective writes and navigation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureInfo {
    pub owner: String,
    pub is_reference: bool,
    pub many: bool,
    pub containment: bool,
    pub opposite: Option<String>,
}

impl FeatureInfo {
    fn of(owner: &str, feature: Feature<'_>) -> Self {
        let reference = feature.as_reference();
        FeatureInfo {
            owner: owner.to_owned(),
            is_reference: reference.is_some(),
            many: feature.upper().is_many(),
            containment: reference.is_some_and(|r| r.containment),
            opposite: reference.and_then(|r| r.opposite.clone()),
        }
    }
}

/// Type information a repository consults while it is being edited.
pub trait Schema {
    fn has_class(&self, class: &str) -> bool;
    fn feature_info(&self, class: &str, feature: &str) -> Option<FeatureInfo>;
    fn is_subtype(&self, sub: &str, sup: &str) -> bool;
}

impl Schema for Metamodel {
    fn has_class(&self, class: &str) -> bool {
        self.class(class).is_some()
    }

    fn feature_info(&self, class: &str, feature: &str) -> Option<FeatureInfo> {
        self.find_feature(class, feature)
            .map(|(owner, f)| FeatureInfo::of(owner, f))
    }

    fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.supertype_closure(sub).contains(sup)
    }
}

/// Two metamodels consulted in order; used while a model sits between the
/// metamodel before and after an adaptation.
#[derive(Debug, Clone, Copy)]
pub struct Layered<'a> {
    pub primary: &'a Metamodel,
    pub fallback: &'a Metamodel,
}

impl Schema for Layered<'_> {
    fn has_class(&self, class: &str) -> bool {
        self.primary.has_class(class) || self.fallback.has_class(class)
    }

    fn feature_info(&self, class: &str, feature: &str) -> Option<FeatureInfo> {
        self.primary
            .feature_info(class, feature)
            .or_else(|| self.fallback.feature_info(class, feature))
    }

    fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if self.primary.has_class(sub) && self.primary.has_class(sup) {
            self.primary.is_subtype(sub, sup)
        } else {
            self.fallback.is_subtype(sub, sup)
        }
    }
}

/// A single slot mutation.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotWrite {
    /// Replace the slot content. A list value replaces a many-valued slot.
    Set(Value),
    /// Append to a many-valued slot.
    Add(Value),
    /// Remove the first occurrence of a value.
    Remove(Value),
    Unset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    TypeMismatch,
    Multiplicity,
    UnknownFeature,
    UnknownClass,
    AbstractInstance,
    DanglingRef,
    ContainmentCycle,
    MultiContainer,
    Orphan,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ViolationKind::TypeMismatch => "TYPE_MISMATCH",
            ViolationKind::Multiplicity => "MULTIPLICITY",
            ViolationKind::UnknownFeature => "UNKNOWN_FEATURE",
            ViolationKind::UnknownClass => "UNKNOWN_CLASS",
            ViolationKind::AbstractInstance => "ABSTRACT_INSTANCE",
            ViolationKind::DanglingRef => "DANGLING_REF",
            ViolationKind::ContainmentCycle => "CONTAINMENT_CYCLE",
            ViolationKind::MultiContainer => "MULTI_CONTAINER",
            ViolationKind::Orphan => "ORPHAN",
        };
        f.write_str(name)
    }
}

/// A conformance failure of one object (and optionally one of its features).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Violation {
    pub object: Option<ObjId>,
    pub element: Option<QualifiedName>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(object) = &self.object {
            write!(f, " {object}")?;
        }
        if let Some(element) = &self.element {
            write!(f, " [{element}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repository {
    pub metamodel: String,
    pub release: u32,
    resources: Vec<Resource>,
    objects: BTreeMap<ObjId, Obj>,
    next_id: u64,
}

impl Repository {
    pub fn new(metamodel: &str, release: u32) -> Self {
        Repository {
            metamodel: metamodel.to_owned(),
            release,
            resources: Vec::new(),
            objects: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn resource(&self, name: &str) -> Option<&Resource> {
        self.resources.iter().find(|r| r.name == name)
    }

    /// Returns the named resource, creating an empty one if needed.
    pub fn ensure_resource(&mut self, name: &str) -> &mut Resource {
        let index = match self.resources.iter().position(|r| r.name == name) {
            Some(index) => index,
            None => {
                self.resources.push(Resource {
                    name: name.to_owned(),
                    roots: Vec::new(),
                });
                self.resources.len() - 1
            }
        };
        &mut self.resources[index]
    }

    pub fn objects(&self) -> impl Iterator<Item = &Obj> {
        self.objects.values()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, id: &ObjId) -> bool {
        self.objects.contains_key(id)
    }

    pub fn object(&self, id: &ObjId) -> Result<&Obj, ModelError> {
        self.objects
            .get(id)
            .ok_or_else(|| ModelError::UnknownObject(id.clone()))
    }

    pub fn object_mut(&mut self, id: &ObjId) -> Result<&mut Obj, ModelError> {
        self.objects
            .get_mut(id)
            .ok_or_else(|| ModelError::UnknownObject(id.clone()))
    }

    pub fn class_of(&self, id: &ObjId) -> Result<&str, ModelError> {
        self.object(id).map(|o| o.class.as_str())
    }

    fn fresh_id(&mut self) -> ObjId {
        loop {
            let id = ObjId(format!("o{}", self.next_id));
            self.next_id += 1;
            if !self.objects.contains_key(&id) {
                return id;
            }
        }
    }

    /// Creates an object with empty slots as a root of `resource`.
    /// Abstractness is not checked here.
    pub fn new_instance(
        &mut self,
        schema: &dyn Schema,
        resource: &str,
        class: &str,
    ) -> Result<ObjId, ModelError> {
        if !schema.has_class(class) {
            return Err(ModelError::UnknownClass(class.to_owned()));
        }
        let id = self.fresh_id();
        self.insert_object(id.clone(), class, resource);
        Ok(id)
    }

    /// Creates an object with a caller-chosen id as a root of `resource`.
    pub fn new_instance_with_id(
        &mut self,
        schema: &dyn Schema,
        resource: &str,
        class: &str,
        id: impl Into<String>,
    ) -> Result<ObjId, ModelError> {
        if !schema.has_class(class) {
            return Err(ModelError::UnknownClass(class.to_owned()));
        }
        let id = ObjId::new(id);
        if self.objects.contains_key(&id) {
            return Err(ModelError::DuplicateId(id));
        }
        self.insert_object(id.clone(), class, resource);
        Ok(id)
    }

    fn insert_object(&mut self, id: ObjId, class: &str, resource: &str) {
        self.objects.insert(
            id.clone(),
            Obj {
                id: id.clone(),
                class: class.to_owned(),
                slots: BTreeMap::new(),
                resource: resource.to_owned(),
            },
        );
        self.ensure_resource(resource).roots.push(id);
    }

    /// Changes an object's class without touching its slots.
    pub fn retype(&mut self, id: &ObjId, class: &str) -> Result<(), ModelError> {
        self.object_mut(id)?.class = class.to_owned();
        Ok(())
    }

    /// The stored value; many-valued features read as an empty list when
    /// unset. `None` means absent.
    pub fn get_slot(
        &self,
        schema: &dyn Schema,
        id: &ObjId,
        feature: &str,
    ) -> Result<Option<Value>, ModelError> {
        let obj = self.object(id)?;
        Ok(match obj.slots.get(feature) {
            Some(value) => Some(value.clone()),
            None => schema
                .feature_info(&obj.class, feature)
                .filter(|info| info.many)
                .map(|_| Value::List(Vec::new())),
        })
    }

    /// Raw slot access without any metamodel interpretation.
    pub fn slot(&self, id: &ObjId, feature: &str) -> Option<&Value> {
        self.objects.get(id).and_then(|o| o.slots.get(feature))
    }

    /// Applies a slot mutation, keeping containment and opposites consistent.
    /// Returns a warning when the write had no effect.
    pub fn write_slot(
        &mut self,
        schema: &dyn Schema,
        id: &ObjId,
        feature: &str,
        write: SlotWrite,
    ) -> Result<Option<String>, ModelError> {
        let class = self.class_of(id)?.to_owned();
        let info = schema.feature_info(&class, feature);
        let reference_info = info.as_ref().filter(|i| i.is_reference);
        match (write, reference_info) {
            (SlotWrite::Set(value), Some(info)) => {
                for old in self.ref_values(id, feature) {
                    self.unlink(id, feature, info, &old);
                }
                self.raw_unset(id, feature);
                for item in value.items() {
                    self.set_or_link(schema, id, feature, info, item.clone());
                }
                Ok(None)
            }
            (SlotWrite::Add(value), Some(info)) => {
                if !info.many && self.slot(id, feature).is_some() {
                    return Err(ModelError::NotMany { class, feature: feature.into() });
                }
                self.set_or_link(schema, id, feature, info, value);
                Ok(None)
            }
            (SlotWrite::Remove(value), Some(info)) => {
                if !self.slot_holds(id, feature, &value) {
                    return Ok(Some(absent_warning(id, feature, &value)));
                }
                match value {
                    Value::Ref(target) => self.unlink(id, feature, info, &target),
                    other => self.raw_remove(id, feature, &other),
                }
                Ok(None)
            }
            (SlotWrite::Unset, Some(info)) => {
                for old in self.ref_values(id, feature) {
                    self.unlink(id, feature, info, &old);
                }
                self.raw_unset(id, feature);
                Ok(None)
            }
            (SlotWrite::Set(value), _) => {
                let many = info.as_ref().map_or(matches!(value, Value::List(_)), |i| i.many);
                let value = match value {
                    Value::List(items) if !many && items.len() == 1 => items.into_iter().next().unwrap(),
                    Value::List(items) => Value::List(items),
                    scalar if many => Value::List(vec![scalar]),
                    scalar => scalar,
                };
                self.raw_set(id, feature, value);
                Ok(None)
            }
            (SlotWrite::Add(value), _) => {
                if info.as_ref().is_some_and(|i| !i.many) && self.slot(id, feature).is_some() {
                    return Err(ModelError::NotMany { class, feature: feature.into() });
                }
                let many = info.as_ref().is_none_or(|i| i.many);
                self.raw_push(id, feature, value, many);
                Ok(None)
            }
            (SlotWrite::Remove(value), _) => {
                if !self.slot_holds(id, feature, &value) {
                    return Ok(Some(absent_warning(id, feature, &value)));
                }
                self.raw_remove(id, feature, &value);
                Ok(None)
            }
            (SlotWrite::Unset, _) => {
                self.raw_unset(id, feature);
                Ok(None)
            }
        }
    }

    fn set_or_link(&mut self, schema: &dyn Schema, id: &ObjId, feature: &str, info: &FeatureInfo, value: Value) {
        match value {
            Value::Ref(target) if self.objects.contains_key(&target) => {
                self.link(schema, id, feature, info, &target)
            }
            other => self.raw_push(id, feature, other, info.many),
        }
    }

    fn slot_holds(&self, id: &ObjId, feature: &str, value: &Value) -> bool {
        self.slot(id, feature)
            .is_some_and(|v| v.items().iter().any(|item| item == value))
    }

    fn ref_values(&self, id: &ObjId, feature: &str) -> Vec<ObjId> {
        self.slot(id, feature)
            .map(|v| v.refs().cloned().collect())
            .unwrap_or_default()
    }

    /// Establishes `source.feature ∋ target` plus the opposite end.
    fn link(&mut self, schema: &dyn Schema, source: &ObjId, feature: &str, info: &FeatureInfo, target: &ObjId) {
        if !info.many {
            match self.slot(source, feature).and_then(Value::as_ref_id).cloned() {
                Some(old) if &old == target => return,
                Some(old) => self.unlink(source, feature, info, &old),
                None => self.raw_unset(source, feature),
            }
        } else if info.opposite.is_some() && self.slot_holds(source, feature, &Value::Ref(target.clone())) {
            return;
        }
        if info.containment {
            self.detach(schema, target);
        }
        self.raw_push(source, feature, Value::Ref(target.clone()), info.many);
        if info.containment {
            let resource = self.objects[source].resource.clone();
            self.move_subtree(schema, target, &resource);
        }

        let Some(opposite) = &info.opposite else { return };
        let Some(target_class) = self.objects.get(target).map(|o| o.class.clone()) else { return };
        let Some(back) = schema.feature_info(&target_class, opposite) else { return };
        if back.many {
            if self.slot_holds(target, opposite, &Value::Ref(source.clone())) {
                return;
            }
        } else if let Some(old) = self.slot(target, opposite).and_then(Value::as_ref_id).cloned() {
            if &old == source {
                return;
            }
            self.unlink(target, opposite, &back, &old);
        }
        if back.containment {
            self.detach(schema, source);
        }
        self.raw_push(target, opposite, Value::Ref(source.clone()), back.many);
        if back.containment {
            let resource = self.objects[target].resource.clone();
            self.move_subtree(schema, source, &resource);
        }
    }

    /// Removes `source.feature ∋ target` (first occurrence) and the opposite end.
    fn unlink(&mut self, source: &ObjId, feature: &str, info: &FeatureInfo, target: &ObjId) {
        self.raw_remove(source, feature, &Value::Ref(target.clone()));
        if let Some(opposite) = &info.opposite {
            if self.objects.contains_key(target) {
                self.raw_remove(target, opposite, &Value::Ref(source.clone()));
            }
        }
    }

    /// Takes `child` out of every containment slot and every root list.
    fn detach(&mut self, schema: &dyn Schema, child: &ObjId) {
        for resource in &mut self.resources {
            resource.roots.retain(|r| r != child);
        }
        let holders: Vec<(ObjId, String, FeatureInfo)> = self
            .objects
            .values()
            .flat_map(|o| {
                o.slots.iter().filter_map(move |(f, v)| {
                    let info = schema.feature_info(&o.class, f)?;
                    (info.containment && v.refs().any(|r| r == child)).then(|| (o.id.clone(), f.clone(), info))
                })
            })
            .collect();
        for (holder, feature, info) in holders {
            self.unlink(&holder, &feature, &info, child);
        }
    }

    /// Objects transitively contained in `root`, including `root`, in
    /// depth-first order.
    pub fn containment_closure(&self, schema: &dyn Schema, root: &ObjId) -> Vec<ObjId> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![root.clone()];
        while let Some(id) = stack.pop() {
            let Some(obj) = self.objects.get(&id) else { continue };
            if !seen.insert(id.clone()) {
                continue;
            }
            out.push(id);
            let mut children = Vec::new();
            for (feature, value) in &obj.slots {
                if schema
                    .feature_info(&obj.class, feature)
                    .is_some_and(|i| i.containment)
                {
                    children.extend(value.refs().cloned());
                }
            }
            stack.extend(children.into_iter().rev());
        }
        out
    }

    fn move_subtree(&mut self, schema: &dyn Schema, root: &ObjId, resource: &str) {
        for id in self.containment_closure(schema, root) {
            if let Some(obj) = self.objects.get_mut(&id) {
                obj.resource = resource.to_owned();
            }
        }
    }

    fn raw_set(&mut self, id: &ObjId, feature: &str, value: Value) {
        let Some(obj) = self.objects.get_mut(id) else { return };
        match value {
            Value::List(items) if items.is_empty() => {
                obj.slots.remove(feature);
            }
            value => {
                obj.slots.insert(feature.to_owned(), value);
            }
        }
    }

    fn raw_push(&mut self, id: &ObjId, feature: &str, value: Value, many: bool) {
        let Some(obj) = self.objects.get_mut(id) else { return };
        if !many {
            obj.slots.insert(feature.to_owned(), value);
            return;
        }
        match obj.slots.remove(feature) {
            None => {
                obj.slots.insert(feature.to_owned(), Value::List(vec![value]));
            }
            Some(Value::List(mut items)) => {
                items.push(value);
                obj.slots.insert(feature.to_owned(), Value::List(items));
            }
            Some(scalar) => {
                obj.slots.insert(feature.to_owned(), Value::List(vec![scalar, value]));
            }
        }
    }

    fn raw_remove(&mut self, id: &ObjId, feature: &str, value: &Value) {
        let Some(obj) = self.objects.get_mut(id) else { return };
        let Some(current) = obj.slots.get_mut(feature) else { return };
        match current {
            Value::List(items) => {
                if let Some(pos) = items.iter().position(|v| v == value) {
                    items.remove(pos);
                }
                if items.is_empty() {
                    obj.slots.remove(feature);
                }
            }
            scalar if scalar == value => {
                obj.slots.remove(feature);
            }
            _ => {}
        }
    }

    fn raw_unset(&mut self, id: &ObjId, feature: &str) {
        if let Some(obj) = self.objects.get_mut(id) {
            obj.slots.remove(feature);
        }
    }

    /// Renames a slot key on one object, keeping its value.
    pub fn rekey_slot(&mut self, id: &ObjId, from: &str, to: &str) -> Result<(), ModelError> {
        let obj = self.object_mut(id)?;
        if let Some(value) = obj.slots.remove(from) {
            obj.slots.insert(to.to_owned(), value);
        }
        Ok(())
    }

    /// Overwrites a slot without any containment or opposite bookkeeping.
    /// Empty lists clear the slot.
    pub fn put_slot_raw(&mut self, id: &ObjId, feature: &str, value: Option<Value>) -> Result<(), ModelError> {
        self.object(id)?;
        match value {
            Some(value) => self.raw_set(id, feature, value),
            None => self.raw_unset(id, feature),
        }
        Ok(())
    }

    /// Deletes an object and everything it contains, and scrubs every
    /// reference to the deleted objects.
    pub fn delete_instance(&mut self, schema: &dyn Schema, id: &ObjId) -> Result<Vec<ObjId>, ModelError> {
        self.object(id)?;
        let doomed = self.containment_closure(schema, id);
        let doomed_set: BTreeSet<&ObjId> = doomed.iter().collect();
        for resource in &mut self.resources {
            resource.roots.retain(|r| !doomed_set.contains(r));
        }
        for gone in &doomed {
            self.objects.remove(gone);
        }
        for obj in self.objects.values_mut() {
            obj.slots.retain(|_, value| match value {
                Value::Ref(target) => !doomed_set.contains(target),
                Value::List(items) => {
                    items.retain(|v| v.as_ref_id().is_none_or(|t| !doomed_set.contains(t)));
                    !items.is_empty()
                }
                _ => true,
            });
        }
        Ok(doomed)
    }

    /// Instances of `class` in id order.
    pub fn all_instances(
        &self,
        schema: &dyn Schema,
        class: &str,
        include_subtypes: bool,
    ) -> Result<Vec<ObjId>, ModelError> {
        if !schema.has_class(class) {
            return Err(ModelError::UnknownClass(class.to_owned()));
        }
        Ok(self
            .objects
            .values()
            .filter(|o| {
                o.class == class || (include_subtypes && schema.is_subtype(&o.class, class))
            })
            .map(|o| o.id.clone())
            .collect())
    }

    /// Objects whose `owner_class.feature` slot holds `target`, in id order.
    pub fn get_inverse(
        &self,
        schema: &dyn Schema,
        target: &ObjId,
        feature: &QualifiedName,
    ) -> Result<Vec<ObjId>, ModelError> {
        self.object(target)?;
        let owner_class = feature.head();
        let name = feature.member().unwrap_or_default();
        let info = schema.feature_info(owner_class, name).ok_or_else(|| {
            ModelError::NotFound(MetamodelError::NotFound {
                qualified: feature.to_string(),
                segment: if schema.has_class(owner_class) { name } else { owner_class }.to_owned(),
            })
        })?;
        if !info.is_reference {
            return Err(ModelError::NotAReference(feature.clone()));
        }
        Ok(self
            .objects
            .values()
            .filter(|o| schema.is_subtype(&o.class, owner_class))
            .filter(|o| o.slots.get(name).is_some_and(|v| v.refs().any(|r| r == target)))
            .map(|o| o.id.clone())
            .collect())
    }

    /// Re-homes every root of `from` (and their contents) into `to`.
    pub fn move_resource(&mut self, schema: &dyn Schema, from: &str, to: &str) -> Result<(), ModelError> {
        let index = self
            .resources
            .iter()
            .position(|r| r.name == from)
            .ok_or_else(|| ModelError::UnknownResource(from.to_owned()))?;
        if from == to {
            return Ok(());
        }
        let moved = self.resources.remove(index);
        for root in &moved.roots {
            self.move_subtree(schema, root, to);
        }
        // objects not reachable from a root still belong to `from`
        for obj in self.objects.values_mut() {
            if obj.resource == from {
                obj.resource = to.to_owned();
            }
        }
        self.ensure_resource(to).roots.extend(moved.roots);
        Ok(())
    }

    /// A repository holding only the named resource and its objects.
    pub fn extract_resource(&self, name: &str) -> Result<Repository, ModelError> {
        let resource = self
            .resource(name)
            .ok_or_else(|| ModelError::UnknownResource(name.to_owned()))?;
        Ok(Repository {
            metamodel: self.metamodel.clone(),
            release: self.release,
            resources: vec![resource.clone()],
            objects: self
                .objects
                .iter()
                .filter(|(_, o)| o.resource == name)
                .map(|(id, o)| (id.clone(), o.clone()))
                .collect(),
            next_id: self.next_id,
        })
    }

    /// Checks the repository against `mm`; an empty result means conforming.
    pub fn check_conformance(&self, mm: &Metamodel) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut containers: BTreeMap<&ObjId, Vec<&ObjId>> = BTreeMap::new();

        for obj in self.objects.values() {
            let violation = |kind, element: Option<QualifiedName>, message: String| Violation {
                object: Some(obj.id.clone()),
                element,
                kind,
                message,
            };
            let Some(class) = mm.class(&obj.class) else {
                out.push(violation(
                    ViolationKind::UnknownClass,
                    Some(QualifiedName::new(obj.class.clone())),
                    format!("class `{}` is not declared", obj.class),
                ));
                continue;
            };
            if class.is_abstract {
                out.push(violation(
                    ViolationKind::AbstractInstance,
                    Some(QualifiedName::new(obj.class.clone())),
                    format!("class `{}` is abstract", obj.class),
                ));
            }
            let features = mm.all_features(&obj.class).unwrap_or_default();
            for slot in obj.slots.keys() {
                if !features.iter().any(|(_, f)| f.name() == slot) {
                    out.push(violation(
                        ViolationKind::UnknownFeature,
                        Some(QualifiedName::member_of(&obj.class, slot)),
                        format!("class `{}` has no feature `{slot}`", obj.class),
                    ));
                }
            }
            for (owner, feature) in &features {
                let qn = QualifiedName::member_of(owner, feature.name());
                let value = obj.slots.get(feature.name());
                let many = feature.upper().is_many();
                let count = match value {
                    None => 0,
                    Some(Value::List(items)) => items.len(),
                    Some(_) => 1,
                };
                match value {
                    Some(Value::List(_)) if !many => out.push(violation(
                        ViolationKind::TypeMismatch,
                        Some(qn.clone()),
                        "list stored in a single-valued feature".into(),
                    )),
                    Some(v) if many && !matches!(v, Value::List(_)) => out.push(violation(
                        ViolationKind::TypeMismatch,
                        Some(qn.clone()),
                        "scalar stored in a many-valued feature".into(),
                    )),
                    _ => {}
                }
                if count < feature.lower() as usize || !feature.upper().admits(count) {
                    out.push(violation(
                        ViolationKind::Multiplicity,
                        Some(qn.clone()),
                        format!("{count} value(s), expected {}..{}", feature.lower(), feature.upper()),
                    ));
                }
                let Some(value) = value else { continue };
                for item in value.items() {
                    if let Value::List(_) = item {
                        out.push(violation(ViolationKind::TypeMismatch, Some(qn.clone()), "nested list".into()));
                        continue;
                    }
                    match feature {
                        Feature::Attribute(a) => {
                            if let Some(message) = attribute_type_error(mm, &a.type_name, item) {
                                out.push(violation(ViolationKind::TypeMismatch, Some(qn.clone()), message));
                            }
                        }
                        Feature::Reference(r) => {
                            let Value::Ref(target) = item else {
                                out.push(violation(
                                    ViolationKind::TypeMismatch,
                                    Some(qn.clone()),
                                    format!("expected a reference to `{}`, found {}", r.target, item.type_label()),
                                ));
                                continue;
                            };
                            let Some(target_obj) = self.objects.get(target) else {
                                out.push(violation(
                                    ViolationKind::DanglingRef,
                                    Some(qn.clone()),
                                    format!("reference to missing object `{target}`"),
                                ));
                                continue;
                            };
                            if !mm.is_subtype(&target_obj.class, &r.target) {
                                out.push(violation(
                                    ViolationKind::TypeMismatch,
                                    Some(qn.clone()),
                                    format!("`{target}` is a `{}`, not a `{}`", target_obj.class, r.target),
                                ));
                            }
                            if r.containment {
                                containers.entry(target).or_default().push(&obj.id);
                            }
                            if let Some(opposite) = &r.opposite {
                                let back = target_obj.slots.get(opposite);
                                if !back.is_some_and(|b| b.refs().any(|x| x == &obj.id)) {
                                    out.push(violation(
                                        ViolationKind::TypeMismatch,
                                        Some(qn.clone()),
                                        format!("opposite `{opposite}` of `{target}` does not point back"),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }

        let mut root_count: BTreeMap<&ObjId, usize> = BTreeMap::new();
        for resource in &self.resources {
            for root in &resource.roots {
                *root_count.entry(root).or_default() += 1;
                match self.objects.get(root) {
                    None => out.push(Violation {
                        object: Some(root.clone()),
                        element: None,
                        kind: ViolationKind::DanglingRef,
                        message: format!("resource `{}` lists missing root `{root}`", resource.name),
                    }),
                    Some(obj) if obj.resource != resource.name => out.push(Violation {
                        object: Some(root.clone()),
                        element: None,
                        kind: ViolationKind::MultiContainer,
                        message: format!("root of `{}` but stored in `{}`", resource.name, obj.resource),
                    }),
                    Some(_) => {}
                }
            }
        }

        for obj in self.objects.values() {
            let holders = containers.get(&obj.id).map_or(0, Vec::len);
            let roots = root_count.get(&obj.id).copied().unwrap_or(0);
            if holders + roots > 1 {
                out.push(Violation {
                    object: Some(obj.id.clone()),
                    element: None,
                    kind: ViolationKind::MultiContainer,
                    message: format!("held by {holders} container slot(s) and {roots} root list(s)"),
                });
            } else if holders + roots == 0 {
                out.push(Violation {
                    object: Some(obj.id.clone()),
                    element: None,
                    kind: ViolationKind::Orphan,
                    message: "neither a resource root nor contained".into(),
                });
            }
            // walk up the container chain looking for a cycle back to obj
            let mut seen = BTreeSet::new();
            let mut cursor = &obj.id;
            while let Some(parent) = containers.get(cursor).and_then(|h| h.first()) {
                if *parent == &obj.id {
                    out.push(Violation {
                        object: Some(obj.id.clone()),
                        element: None,
                        kind: ViolationKind::ContainmentCycle,
                        message: "object is transitively contained in itself".into(),
                    });
                    break;
                }
                if !seen.insert(*parent) {
                    break;
                }
                cursor = parent;
            }
            if let (Some(holder), false) = (containers.get(&obj.id).and_then(|h| h.first()), holders > 1) {
                if let Some(parent) = self.objects.get(*holder) {
                    if parent.resource != obj.resource {
                        out.push(Violation {
                            object: Some(obj.id.clone()),
                            element: None,
                            kind: ViolationKind::MultiContainer,
                            message: format!(
                                "stored in `{}` but contained by `{}` from `{}`",
                                obj.resource, parent.id, parent.resource
                            ),
                        });
                    }
                }
            }
        }

        out.sort();
        out.dedup();
        out
    }
}

fn absent_warning(id: &ObjId, feature: &str, value: &Value) -> String {
    format!("remove of {value} from {id}.{feature}: value not present")
}

fn attribute_type_error(mm: &Metamodel, type_name: &str, value: &Value) -> Option<String> {
    let ok = match (type_name, value) {
        ("String", Value::Str(_)) => true,
        ("Int", Value::Int(_)) => true,
        ("Bool", Value::Bool(_)) => true,
        ("Float", Value::Float(_) | Value::Int(_)) => true,
        (_, Value::Str(s)) => mm
            .enumeration(type_name)
            .is_some_and(|e| e.literals.iter().any(|l| l == s)),
        _ => false,
    };
    (!ok).then(|| format!("expected `{type_name}`, found {} {value}", value.type_label()))
}

#[derive(Serialize, Deserialize)]
struct RepositoryDoc {
    metamodel: String,
    release: u32,
    resources: Vec<ResourceDoc>,
}

#[derive(Serialize, Deserialize)]
struct ResourceDoc {
    name: String,
    roots: Vec<ObjId>,
    objects: Vec<ObjDoc>,
}

#[derive(Serialize, Deserialize)]
struct ObjDoc {
    id: ObjId,
    class: String,
    slots: BTreeMap<String, Value>,
}

impl Serialize for Repository {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut docs: Vec<ResourceDoc> = self
            .resources
            .iter()
            .map(|r| ResourceDoc {
                name: r.name.clone(),
                roots: r.roots.clone(),
                objects: Vec::new(),
            })
            .collect();
        for obj in self.objects.values() {
            let doc = ObjDoc {
                id: obj.id.clone(),
                class: obj.class.clone(),
                slots: obj.slots.clone(),
            };
            match docs.iter_mut().find(|d| d.name == obj.resource) {
                Some(resource) => resource.objects.push(doc),
                None => docs.push(ResourceDoc {
                    name: obj.resource.clone(),
                    roots: Vec::new(),
                    objects: vec![doc],
                }),
            }
        }
        RepositoryDoc {
            metamodel: self.metamodel.clone(),
            release: self.release,
            resources: docs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Repository {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = RepositoryDoc::deserialize(deserializer)?;
        Repository::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

impl Repository {
    fn from_doc(doc: RepositoryDoc) -> Result<Repository, ModelError> {
        let mut repo = Repository::new(&doc.metamodel, doc.release);
        for resource in doc.resources {
            if repo.resource(&resource.name).is_some() {
                return Err(ModelError::UnknownResource(format!("{} (declared twice)", resource.name)));
            }
            repo.resources.push(Resource {
                name: resource.name.clone(),
                roots: resource.roots,
            });
            for obj in resource.objects {
                if repo.objects.contains_key(&obj.id) {
                    return Err(ModelError::DuplicateId(obj.id));
                }
                repo.objects.insert(
                    obj.id.clone(),
                    Obj {
                        id: obj.id,
                        class: obj.class,
                        slots: obj.slots.into_iter().filter(|(_, v)| !matches!(v, Value::List(l) if l.is_empty())).collect(),
                        resource: resource.name.clone(),
                    },
                );
            }
        }
        repo.next_id = repo.objects.keys().filter_map(ObjId::counter).max().map_or(1, |n| n + 1);
        Ok(repo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metamodel::{Attribute, Class, Reference, Upper};

    fn graph1() -> Metamodel {
        Metamodel::new("Graph1")
            .with_class(
                Class::new("Graph")
                    .with_reference(Reference::new("nodes", "Node", true, 0, Upper::Unbounded))
                    .with_reference(Reference::new("edges", "Edge", true, 0, Upper::Unbounded)),
            )
            .with_class(Class::new("Node").with_attribute(Attribute::new("name", "String", 0, Upper::Bounded(1))))
            .with_class(
                Class::new("Edge")
                    .with_reference(Reference::new("src", "Node", false, 0, Upper::Bounded(1)))
                    .with_reference(Reference::new("trg", "Node", false, 0, Upper::Bounded(1))),
            )
    }

    fn tiny() -> (Metamodel, Repository, ObjId) {
        let mm = graph1();
        let mut repo = Repository::new("Graph1", 0);
        let g = repo.new_instance_with_id(&mm, "graph", "Graph", "g").unwrap();
        (mm, repo, g)
    }

    #[test]
    fn new_instance_becomes_root() {
        let (mm, mut repo, g) = tiny();
        let n = repo.new_instance(&mm, "graph", "Node").unwrap();
        assert_eq!(n.as_str(), "o1");
        assert_eq!(repo.resource("graph").unwrap().roots, vec![g.clone(), n.clone()]);
        repo.write_slot(&mm, &g, "nodes", SlotWrite::Add(Value::Ref(n.clone()))).unwrap();
        assert_eq!(repo.resource("graph").unwrap().roots, vec![g]);
        assert_eq!(repo.check_conformance(&mm), vec![]);
        assert_eq!(
            repo.new_instance(&mm, "graph", "Nope"),
            Err(ModelError::UnknownClass("Nope".into()))
        );
    }

    #[test]
    fn many_valued_reads_empty_list() {
        let (mm, repo, g) = tiny();
        assert_eq!(repo.get_slot(&mm, &g, "nodes").unwrap(), Some(Value::List(vec![])));
        assert_eq!(
            repo.get_slot(&mm, &"zz".into(), "nodes"),
            Err(ModelError::UnknownObject("zz".into()))
        );
    }

    #[test]
    fn containment_moves_between_containers() {
        let (mm, mut repo, g) = tiny();
        let g2 = repo.new_instance_with_id(&mm, "other", "Graph", "g2").unwrap();
        let n = repo.new_instance(&mm, "graph", "Node").unwrap();
        repo.write_slot(&mm, &g, "nodes", SlotWrite::Add(Value::Ref(n.clone()))).unwrap();
        repo.write_slot(&mm, &g2, "nodes", SlotWrite::Set(Value::List(vec![Value::Ref(n.clone())])))
            .unwrap();
        assert_eq!(repo.slot(&g, "nodes"), None);
        assert_eq!(repo.slot(&g2, "nodes"), Some(&Value::List(vec![Value::Ref(n.clone())])));
        assert_eq!(repo.object(&n).unwrap().resource(), "other");
        assert_eq!(repo.check_conformance(&mm), vec![]);
    }

    #[test]
    fn remove_absent_warns() {
        let (mm, mut repo, g) = tiny();
        let warning = repo
            .write_slot(&mm, &g, "nodes", SlotWrite::Remove(Value::reference("nope")))
            .unwrap();
        assert!(warning.is_some());
    }

    #[test]
    fn add_to_single_valued_is_error_once_set() {
        let (mm, mut repo, _) = tiny();
        let n = repo.new_instance(&mm, "graph", "Node").unwrap();
        repo.write_slot(&mm, &n, "name", SlotWrite::Add(Value::str("a"))).unwrap();
        assert!(matches!(
            repo.write_slot(&mm, &n, "name", SlotWrite::Add(Value::str("b"))),
            Err(ModelError::NotMany { .. })
        ));
    }

    #[test]
    fn opposites_stay_consistent() {
        let mm = Metamodel::new("O")
            .with_class(Class::new("P").with_reference(Reference {
                opposite: Some("parent".into()),
                ..Reference::new("children", "C", true, 0, Upper::Unbounded)
            }))
            .with_class(Class::new("C").with_reference(Reference {
                opposite: Some("children".into()),
                ..Reference::new("parent", "P", false, 0, Upper::Bounded(1))
            }));
        let mut repo = Repository::new("O", 0);
        let p1 = repo.new_instance_with_id(&mm, "r", "P", "p1").unwrap();
        let p2 = repo.new_instance_with_id(&mm, "r", "P", "p2").unwrap();
        let c = repo.new_instance_with_id(&mm, "r", "C", "c").unwrap();
        repo.write_slot(&mm, &c, "parent", SlotWrite::Set(Value::Ref(p1.clone()))).unwrap();
        assert_eq!(repo.slot(&p1, "children"), Some(&Value::List(vec![Value::Ref(c.clone())])));
        assert_eq!(repo.resource("r").unwrap().roots, vec![p1.clone(), p2.clone()]);
        repo.write_slot(&mm, &p2, "children", SlotWrite::Add(Value::Ref(c.clone()))).unwrap();
        assert_eq!(repo.slot(&p1, "children"), None);
        assert_eq!(repo.slot(&c, "parent"), Some(&Value::Ref(p2.clone())));
        assert_eq!(repo.check_conformance(&mm), vec![]);
        repo.write_slot(&mm, &c, "parent", SlotWrite::Unset).unwrap();
        assert_eq!(repo.slot(&p2, "children"), None);
        let kinds: Vec<_> = repo.check_conformance(&mm).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Orphan]);
    }

    #[test]
    fn conformance_detects_problems() {
        let (mm, mut repo, g) = tiny();
        let n = repo.new_instance_with_id(&mm, "graph", "Node", "n").unwrap();
        let e = repo.new_instance_with_id(&mm, "graph", "Edge", "e").unwrap();
        repo.write_slot(&mm, &g, "nodes", SlotWrite::Add(Value::Ref(n.clone()))).unwrap();
        repo.write_slot(&mm, &g, "edges", SlotWrite::Add(Value::Ref(e.clone()))).unwrap();
        assert_eq!(repo.check_conformance(&mm), vec![]);

        let mut bad = repo.clone();
        bad.put_slot_raw(&n, "text", Some(Value::str("x"))).unwrap();
        assert_eq!(bad.check_conformance(&mm)[0].kind, ViolationKind::UnknownFeature);

        let mut bad = repo.clone();
        bad.put_slot_raw(&e, "src", Some(Value::str("n"))).unwrap();
        assert_eq!(bad.check_conformance(&mm)[0].kind, ViolationKind::TypeMismatch);

        let mut bad = repo.clone();
        bad.put_slot_raw(&e, "src", Some(Value::reference("ghost"))).unwrap();
        assert_eq!(bad.check_conformance(&mm)[0].kind, ViolationKind::DanglingRef);

        let mut bad = repo.clone();
        bad.put_slot_raw(&e, "src", Some(Value::Ref(e.clone()))).unwrap();
        assert_eq!(bad.check_conformance(&mm)[0].kind, ViolationKind::TypeMismatch);

        let mut bad = repo.clone();
        bad.put_slot_raw(&n, "name", Some(Value::List(vec![Value::str("a"), Value::str("b")]))).unwrap();
        let kinds: Vec<_> = bad.check_conformance(&mm).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::Multiplicity));

        let mut bad = repo.clone();
        bad.put_slot_raw(&g, "nodes", Some(Value::List(vec![Value::Ref(n.clone()), Value::Ref(n.clone())])))
            .unwrap();
        let kinds: Vec<_> = bad.check_conformance(&mm).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::MultiContainer]);
    }

    #[test]
    fn containment_cycle_detected() {
        let mm = Metamodel::new("T").with_class(Class::new("T").with_reference(Reference::new(
            "kids",
            "T",
            true,
            0,
            Upper::Unbounded,
        )));
        let mut repo = Repository::new("T", 0);
        let a = repo.new_instance_with_id(&mm, "r", "T", "a").unwrap();
        let b = repo.new_instance_with_id(&mm, "r", "T", "b").unwrap();
        repo.write_slot(&mm, &a, "kids", SlotWrite::Add(Value::Ref(b.clone()))).unwrap();
        repo.write_slot(&mm, &b, "kids", SlotWrite::Add(Value::Ref(a.clone()))).unwrap();
        let kinds: Vec<_> = repo.check_conformance(&mm).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::ContainmentCycle), "{kinds:?}");
    }

    #[test]
    fn delete_cascades_and_scrubs() {
        let (mm, mut repo, g) = tiny();
        let n = repo.new_instance_with_id(&mm, "graph", "Node", "n").unwrap();
        let e = repo.new_instance_with_id(&mm, "graph", "Edge", "e").unwrap();
        repo.write_slot(&mm, &g, "nodes", SlotWrite::Add(Value::Ref(n.clone()))).unwrap();
        repo.write_slot(&mm, &g, "edges", SlotWrite::Add(Value::Ref(e.clone()))).unwrap();
        repo.write_slot(&mm, &e, "src", SlotWrite::Set(Value::Ref(n.clone()))).unwrap();
        let mut copy = repo.clone();
        copy.delete_instance(&mm, &n).unwrap();
        assert_eq!(copy.slot(&e, "src"), None);
        assert_eq!(copy.slot(&g, "nodes"), None);
        assert_eq!(copy.delete_instance(&mm, &n), Err(ModelError::UnknownObject(n.clone())));
        repo.delete_instance(&mm, &g).unwrap();
        assert!(repo.is_empty());
        assert!(repo.resource("graph").unwrap().roots.is_empty());
    }

    #[test]
    fn value_json_forms() {
        let v: Value = serde_json::from_str(r#"[{"ref":"a"},{"ref":"b"}]"#).unwrap();
        assert_eq!(v, Value::List(vec![Value::reference("a"), Value::reference("b")]));
        assert_eq!(serde_json::to_string(&Value::Float(2.0)).unwrap(), "2.0");
        assert_eq!(serde_json::from_str::<Value>("2.0").unwrap(), Value::Float(2.0));
        assert!(serde_json::from_str::<Value>("null").is_err());
        assert!(serde_json::from_str::<Value>("[[1]]").is_err());
    }
}
