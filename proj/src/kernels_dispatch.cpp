// Copyright 2026-present the permlearn project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "permlearn/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace permlearn::kern {

bool avx2_available() {
#if defined(PERMLEARN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

struct Selection {
    const Ops* table;
    const char* name;
};

Selection select() {
    const char* env = std::getenv("PERMLEARN_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return {&scalar_ops(), "scalar"};
#ifdef PERMLEARN_HAVE_AVX2
    if (env != nullptr && std::strcmp(env, "avx2") == 0 && avx2_available())
        return {&avx2_ops(), "avx2"};
    if ((env == nullptr || std::strcmp(env, "auto") == 0) && avx2_available())
        return {&avx2_ops(), "avx2"};
#endif
    return {&scalar_ops(), "scalar"};
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

}  // namespace

const Ops& ops() { return *selection().table; }

const char* active_backend() { return selection().name; }

#ifndef PERMLEARN_HAVE_AVX2
const Ops& avx2_ops() { return scalar_ops(); }
#endif

}  // namespace permlearn::kern
