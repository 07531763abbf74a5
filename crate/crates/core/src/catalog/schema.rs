//! Queryable views over the stored tables.
//!
//! `objects(id, object_id, class_name, x1, y1, x2, y2)` is the detection table
//! under the names used in day-to-day queries. The storage-level names
//! (`image_id`, `object_class`, `bbox_xmin`, ...) and the older
//! `object_detection_results(frame, class, x_min, x_max, ...)` spelling are
//! accepted as aliases of the same columns.

pub struct ColumnDef {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
}

pub struct TableDef {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub columns: &'static [ColumnDef],
}

impl TableDef {
    pub fn matches(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(name))
    }
}

impl ColumnDef {
    pub fn matches(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(name))
    }
}

pub const OBJECTS: TableDef = TableDef {
    name: "objects",
    aliases: &["object_detection_results", "detections"],
    columns: &[
        ColumnDef { name: "id", aliases: &["image_id", "frame"] },
        ColumnDef { name: "object_id", aliases: &[] },
        ColumnDef { name: "class_name", aliases: &["object_class", "class"] },
        ColumnDef { name: "x1", aliases: &["bbox_xmin", "x_min", "xmin"] },
        ColumnDef { name: "y1", aliases: &["bbox_ymin", "y_min", "ymin"] },
        ColumnDef { name: "x2", aliases: &["bbox_xmax", "x_max", "xmax"] },
        ColumnDef { name: "y2", aliases: &["bbox_ymax", "y_max", "ymax"] },
    ],
};

pub const IMAGES: TableDef = TableDef {
    name: "images",
    aliases: &["image_meta"],
    columns: &[
        ColumnDef { name: "id", aliases: &["image_id", "frame"] },
        ColumnDef { name: "file_path", aliases: &[] },
        ColumnDef { name: "width", aliases: &[] },
        ColumnDef { name: "height", aliases: &[] },
        ColumnDef { name: "timestamp", aliases: &[] },
    ],
};

pub const TABLES: &[&TableDef] = &[&OBJECTS, &IMAGES];

pub fn lookup_table(name: &str) -> Option<&'static TableDef> {
    TABLES.iter().copied().find(|t| t.matches(name))
}
