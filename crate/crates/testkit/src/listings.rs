//! Five reference queries, verbatim apart from highlighting markup.

pub const INTRO: &str = "SELECT DISTINCT frame
FROM object_detection_results
WHERE class = 'car' AND x_max < 500 
SEMANTIC = 'big green car';";

pub const COUNT: &str = "SELECT id, COUNT(*) as c
FROM objects
WHERE class_name='horse'
GROUP BY id
HAVING c = 4";

pub const SPATIAL: &str = "SELECT DISTINCT id
FROM objects
WHERE class_name='car' AND x1>340 AND y1 > 340";

pub const PAIR: &str = "SELECT DISTINCT id from objects WHERE class_name='person' 
INTERSECT 
SELECT DISTINCT id from objects WHERE class_name= 'apple'";

pub const COMPLEX: &str = "SELECT id
FROM
  (SELECT id, COUNT(*) AS c
   FROM objects
   WHERE class_name='person'
   GROUP BY id
   HAVING c = 1) INTERSECT
SELECT DISTINCT id
FROM objects
WHERE class_name='umbrella' INTERSECT
  SELECT id
  FROM
    (SELECT id, COUNT(*) AS c
     FROM objects
     WHERE class_name='car'
     GROUP BY id
     HAVING c = 2)
SEMANTIC 'women no kids'";

pub const ALL: [&str; 5] = [INTRO, COUNT, SPATIAL, PAIR, COMPLEX];
