// Global 64-byte-aligned operator new.
//
// Vectorized kernels (Eigen expressions, auto-vectorized loops) select their
// peel/remainder split from the runtime address of a buffer. With the default
// allocator those addresses vary with allocator history, so floating-point
// reduction orders -- and last-bit results -- could differ between otherwise
// identical runs. Pinning every allocation to one alignment class makes all
// such splits a function of the data size alone, which is what the
// bit-reproducibility guarantees require.

#include <cstdlib>
#include <new>

namespace {

constexpr std::size_t kAlign = 64;

void* aligned_alloc_checked(std::size_t size) {
  const std::size_t padded = (size + kAlign - 1) / kAlign * kAlign;
  void* p = std::aligned_alloc(kAlign, padded ? padded : kAlign);
  if (!p) throw std::bad_alloc();
  return p;
}

}  // namespace

void* operator new(std::size_t size) { return aligned_alloc_checked(size); }
void* operator new[](std::size_t size) { return aligned_alloc_checked(size); }
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  const std::size_t padded = (size + kAlign - 1) / kAlign * kAlign;
  return std::aligned_alloc(kAlign, padded ? padded : kAlign);
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  const std::size_t padded = (size + kAlign - 1) / kAlign * kAlign;
  return std::aligned_alloc(kAlign, padded ? padded : kAlign);
}

void operator delete(void* p) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { std::free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { std::free(p); }
