/*
 * Copyright 2026 The ultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef ULTR_DATASET_HPP_
#define ULTR_DATASET_HPP_

#include <string>

#include "ultr/types.hpp"

namespace ultr {

/*! \brief On-disk dataset encodings. */
enum class DatasetFormat {
  kSvmRank,  // `<label> qid:<id> <fid>:<val> ...` with `#` comments
};

DatasetFormat dataset_format_from_string(const std::string& name);

/*!
 * \brief Loads a ranking dataset, grouping items by query id in file order.
 *
 * Feature vectors are densified to the maximum feature id seen in the file;
 * ids absent from a line default to 0.0. Initial ranks are assigned from the
 * within-query line order (1-based). Grades outside {0..4}, non-increasing
 * feature ids, and malformed tokens are rejected with the offending line
 * number.
 */
Dataset load_dataset(const std::string& path,
                     DatasetFormat format = DatasetFormat::kSvmRank);

//! Writes a dataset in the svmrank format; floats round-trip exactly.
void save_dataset(const Dataset& data, const std::string& path,
                  const std::string& header_comment = "");

//! Sub-collection of items with initial_rank <= max_rank; ranks preserved.
QueryCollection truncate(const QueryCollection& collection, int max_rank);
Dataset truncate(const Dataset& data, int max_rank);

}  // namespace ultr

#endif  // ULTR_DATASET_HPP_
