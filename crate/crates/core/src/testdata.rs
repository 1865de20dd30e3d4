use crate::model::Instance;

pub fn ex1() -> Instance {
    Instance::from_json(include_str!("../tests/data/ex1.json")).unwrap()
}
