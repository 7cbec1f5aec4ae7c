#pragma once

#include <string>

#include "prolite/vm.hpp"

namespace prolite {

enum class Prim : uint32_t {
  Allocate,
  Deallocate,
  GetAtomTagged,
  GetIntegerTagged,
  GetFloat,
  GetNil,
  GetList,
  GetStructureTagged,
  GetValue,
  PutVariable,
  PutAtomTagged,
  PutIntegerTagged,
  PutFloat,
  PutNil,
  PutList,
  PutStructureTagged,
  UnifyVariable,
  UnifyValue,
  UnifyAtomTagged,
  UnifyIntegerTagged,
  UnifyFloat,
  UnifyNil,
  UnifyVoid,
  CreateChoicePoint,  // aux = k (0: generic, k in last arg)
  UpdateChoicePoint,
  DeleteChoicePoint,
  SwitchOnTerm,  // aux = bucket mask over var,atm,int,lst,stc
  SwitchOnAtom,
  SwitchOnInteger,
  SwitchOnStructure,
  LoadCutLevel,
  Cut,
  CreateAtom,
  CreateAtomTagged,
  CreateFunctorArityTagged,
  CreateSwtTable,
  CreateSwtAtmElement,
  CreateSwtIntElement,
  CreateSwtStcElement,
  CreatePred,
  NewObject,
  EnsureLinked,
  RunSystemDirective,
  RunUserDirective,
  BltVar,
  BltNonVar,
  BltAtom,
  BltInteger,
  DynDispatch,
};

// Resolves a call_c function name to a primitive id; aux carries the
// choice-point arity or switch bucket mask. Returns false for unknown names.
bool prim_lookup(const std::string& name, uint32_t& prim, uint64_t& aux);

// All built-in predicate specs (native routines); defined in vm_builtins.cpp.
const std::vector<BuiltinSpec>& all_builtin_specs();
const char* prelude_source();

// FD surface (defined in fd_surface.cpp)
void add_fd_builtin_specs(std::vector<BuiltinSpec>& out);
void register_default_fd(Machine& m);
const char* fd_prelude_source();

}  // namespace prolite
