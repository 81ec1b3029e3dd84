#pragma once

// Eigen must precede httplib, whose resolver headers define `_res`.
#include "pcqa/annotation.hpp"

#include "httplib.h"

namespace pcqa::cli {

/// GET /groups, GET /image/<id>, POST /selection, GET /ci.
void mount_annotation_routes(httplib::Server& server, AnnotationService& service);

}  // namespace pcqa::cli
