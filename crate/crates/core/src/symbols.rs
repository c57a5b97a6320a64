//! Interned identifiers for types, constants, predicates, variables and
//! ground atoms, plus the symbol tables that own their names.

use std::collections::BTreeMap;
use std::fmt;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(TypeId);
id_type!(ConstId);
id_type!(PredId);
id_type!(AtomId);

/// A plan-scoped variable. Fresh variables are allocated whenever an
/// action schema is instantiated into a plan step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?v{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct TypeDef {
    pub name: String,
    /// Parent in the type hierarchy; the root type `object` has none.
    pub parent: Option<TypeId>,
}

#[derive(Debug, Clone)]
pub struct ConstDef {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Debug, Clone)]
pub struct PredDef {
    pub name: String,
    pub param_types: Vec<TypeId>,
}

impl PredDef {
    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

/// Names and signatures shared by a domain and the problems posed in it.
/// A problem extends its domain's table with the problem objects, so
/// constant ids remain valid across both.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub types: Vec<TypeDef>,
    pub consts: Vec<ConstDef>,
    pub preds: Vec<PredDef>,
    type_index: BTreeMap<String, TypeId>,
    const_index: BTreeMap<String, ConstId>,
    pred_index: BTreeMap<String, PredId>,
}

pub const OBJECT_TYPE: &str = "object";

impl SymbolTable {
    pub fn new() -> Self {
        let mut table = Self::default();
        table.intern_type(OBJECT_TYPE, None);
        table
    }

    pub fn object_type(&self) -> TypeId {
        TypeId(0)
    }

    pub fn intern_type(&mut self, name: &str, parent: Option<TypeId>) -> TypeId {
        if let Some(&id) = self.type_index.get(name) {
            return id;
        }
        let id = TypeId(self.types.len() as u32);
        self.types.push(TypeDef {
            name: name.to_string(),
            parent,
        });
        self.type_index.insert(name.to_string(), id);
        id
    }

    pub fn lookup_type(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn intern_const(&mut self, name: &str, ty: TypeId) -> ConstId {
        if let Some(&id) = self.const_index.get(name) {
            return id;
        }
        let id = ConstId(self.consts.len() as u32);
        self.consts.push(ConstDef {
            name: name.to_string(),
            ty,
        });
        self.const_index.insert(name.to_string(), id);
        id
    }

    pub fn lookup_const(&self, name: &str) -> Option<ConstId> {
        self.const_index.get(name).copied()
    }

    pub fn intern_pred(&mut self, name: &str, param_types: Vec<TypeId>) -> PredId {
        if let Some(&id) = self.pred_index.get(name) {
            return id;
        }
        let id = PredId(self.preds.len() as u32);
        self.preds.push(PredDef {
            name: name.to_string(),
            param_types,
        });
        self.pred_index.insert(name.to_string(), id);
        id
    }

    pub fn lookup_pred(&self, name: &str) -> Option<PredId> {
        self.pred_index.get(name).copied()
    }

    pub fn type_name(&self, id: TypeId) -> &str {
        &self.types[id.index()].name
    }

    pub fn const_name(&self, id: ConstId) -> &str {
        &self.consts[id.index()].name
    }

    pub fn pred_name(&self, id: PredId) -> &str {
        &self.preds[id.index()].name
    }

    pub fn const_type(&self, id: ConstId) -> TypeId {
        self.consts[id.index()].ty
    }

    /// True when `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: TypeId, sup: TypeId) -> bool {
        let mut cur = Some(sub);
        while let Some(t) = cur {
            if t == sup {
                return true;
            }
            cur = self.types[t.index()].parent;
        }
        false
    }

    /// The more specific of two types when one contains the other.
    pub fn meet(&self, a: TypeId, b: TypeId) -> Option<TypeId> {
        if self.is_subtype(a, b) {
            Some(a)
        } else if self.is_subtype(b, a) {
            Some(b)
        } else {
            None
        }
    }

    /// Constants whose declared type is compatible with `ty`, in id order.
    pub fn consts_of_type(&self, ty: TypeId) -> impl Iterator<Item = ConstId> + '_ {
        (0..self.consts.len() as u32)
            .map(ConstId)
            .filter(move |&c| self.is_subtype(self.const_type(c), ty))
    }
}
